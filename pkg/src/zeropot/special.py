r"""Modified Bessel functions :math:`I_\nu` and :math:`K_\nu` for real
:math:`\nu \ge 0` and :math:`x > 0`.

:math:`I_\nu` is summed from its power series (all terms positive, so the
sum is accurate to a few ulp) up to ``x = 40`` and from the Hankel
asymptotic expansion beyond. :math:`K_\nu` uses the integral

.. math::
    K_\nu(x) = \int_0^\infty e^{-x \cosh t} \cosh(\nu t)\, dt ,

evaluated with the trapezoidal rule. The integrand is analytic in a strip of
half-width :math:`\pi/2` and decays doubly exponentially, so the rule
converges geometrically; the step only has to resolve the
:math:`e^{-x t^2/2}` peak for large ``x``.

Both functions come in exponentially scaled flavours (``ive``, ``kve``) that
stay finite far beyond the overflow point of the unscaled ones.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, Overflow

# beyond this the unscaled I_nu overflows double precision
X_OVERFLOW = 700.0
_SERIES_MAX_X = 40.0
_EPS = 1e-17


def _check_order(nu: float) -> float:
    nu = float(nu)
    if not nu >= 0:
        raise DomainError(f"Bessel order must be >= 0, got {nu}")
    return nu


def _ive_scalar(nu: float, x: float) -> float:
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    if x <= _SERIES_MAX_X:
        term = math.exp(nu * math.log(0.5 * x) - math.lgamma(nu + 1.0) - x)
        total = term
        q = 0.25 * x * x
        m = 0
        while True:
            m += 1
            term *= q / (m * (m + nu))
            total += term
            if term < _EPS * total:
                return total
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(term) or abs(nxt) < _EPS * abs(total):
            break
        term = nxt
        total += term
    return total / math.sqrt(2.0 * math.pi * x)


def _kve_scalar(nu: float, x: float) -> float:
    h = min(0.1, 0.5 / math.sqrt(x))
    # integrand is below e^-45 of its peak past T
    T = 1.0
    while x * (math.cosh(T) - 1.0) - nu * T < 45.0:
        T *= 1.25
    t = np.arange(int(T / h) + 2) * h
    f = np.exp(-x * (np.cosh(t) - 1.0) + nu * t) * 0.5 * (1.0 + np.exp(-2.0 * nu * t))
    return float(h * (f.sum() - 0.5 * f[0]))


def _apply(fn, nu, x):
    arr = np.asarray(x, dtype=float)
    out = np.vectorize(lambda v: fn(nu, float(v)), otypes=[float])(arr)
    return out if arr.ndim else float(out)


def ive(nu: float, x):
    """``I_nu(x) * exp(-x)``."""
    nu = _check_order(nu)
    if np.any(np.asarray(x) < 0):
        raise DomainError("bessel_i needs x >= 0")
    return _apply(_ive_scalar, nu, x)


def kve(nu: float, x):
    """``K_nu(x) * exp(x)``."""
    nu = _check_order(nu)
    if np.any(np.asarray(x) <= 0):
        raise DomainError("bessel_k needs x > 0")
    return _apply(_kve_scalar, nu, x)


def bessel_i(nu: float, x):
    """Modified Bessel function of the first kind."""
    if np.any(np.asarray(x) > X_OVERFLOW):
        raise Overflow(f"I_nu(x) overflows for x > {X_OVERFLOW}")
    return ive(nu, x) * np.exp(x)


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind (underflows to 0 for huge x)."""
    return kve(nu, x) * np.exp(-np.asarray(x, dtype=float))


def bessel_ip(nu: float, x):
    """Derivative ``I_nu'(x) = I_{nu+1}(x) + (nu/x) I_nu(x)``."""
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if nu == 0:
        return bessel_i(1.0, x)
    return bessel_i(nu + 1.0, x) + nu / x * bessel_i(nu, x)


def bessel_kp(nu: float, x):
    """Derivative ``K_nu'(x) = -K_{nu+1}(x) + (nu/x) K_nu(x)``."""
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if nu == 0:
        return -bessel_k(1.0, x)
    return -bessel_k(nu + 1.0, x) + nu / x * bessel_k(nu, x)


def ivep(nu: float, x):
    """``I_nu'(x) * exp(-x)``."""
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if nu == 0:
        return ive(1.0, x)
    return ive(nu + 1.0, x) + nu / x * ive(nu, x)


def kvep(nu: float, x):
    """``K_nu'(x) * exp(x)``."""
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if nu == 0:
        return -kve(1.0, x)
    return -kve(nu + 1.0, x) + nu / x * kve(nu, x)
