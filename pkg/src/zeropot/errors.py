"""Exception hierarchy shared by all modules."""


class ZeropotError(Exception):
    """Base class for every error raised by this package."""


class NonConvergent(ZeropotError):
    pass


class BadTail(ZeropotError):
    pass


class StepUnderflow(ZeropotError):
    pass


class Overflow(ZeropotError):
    pass


class NotBracketed(ZeropotError):
    pass


class DomainError(ZeropotError, ValueError):
    pass


class ParamDomain(ZeropotError, ValueError):
    """A family parameter lies outside the family's admissible domain."""


class NotAdmissible(ZeropotError, ValueError):
    pass


class NoBoundStateViolation(ZeropotError):
    """A solution assumed nodeless changes sign."""


class TailDivergence(ZeropotError):
    pass


class AdmissibilityError(ZeropotError, ValueError):
    pass


class DepthLimit(ZeropotError):
    pass


class Unstable(ZeropotError):
    pass


class PoorFit(ZeropotError):
    pass
