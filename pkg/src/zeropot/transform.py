"""Composition of zero-energy solvable potentials.

Given a nodeless base pair ``(phi0, chi0)`` with ``W = 1`` for
``V0 + ell(ell+1)/r^2`` and an ``ell = 0`` potential ``V1`` with regular
solution ``phi1``, the potential

    V(r) = V0(r) + ell(ell+1)/r^2 + chi0(r)^-4 * V1(x(r)),   x = phi0/chi0,

has the regular solution ``phi(r) = chi0(r) * phi1(x(r))``. The map
``x(r)`` is strictly increasing because ``dx/dr = 1/chi0^2``. Composing the
result with the same base again gives an iterated potential; everything is
kept as closures so the cost stays linear in the depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .catalog import PotentialSpec, SolutionPair, closed_form_regular, phi_from_chi_quadrature
from .errors import (
    AdmissibilityError,
    DepthLimit,
    DomainError,
    NoBoundStateViolation,
    NotAdmissible,
    TailDivergence,
)
from .numerics import (
    DEFAULT_TOL,
    CumulativeQuad,
    GridSample,
    RegularSolution,
    TailModel,
    Tolerance,
    TAIL_MATCH,
    invert_monotone,
    quad_finite,
    solve_zero_energy_ivp,
)

Fn = Callable[[np.ndarray], np.ndarray]

MAX_DEPTH = 4
DEFAULT_R_MAX = 50.0
X_INNER_MAX = 2000.0
# finite-difference stencils may step this far past r_max of a long-range base
GUARD_SLACK = 0.05


def _arr(r):
    return np.asarray(r, dtype=float)


def _out(x):
    return x if np.ndim(x) else float(x)


# ------------------------------------------------------- second solutions


def chi_from_phi(
    phi: Fn,
    dphi: Fn,
    tail: TailModel,
    ell: int = 0,
    r_lo: float = 1e-3,
    tol: Tolerance = Tolerance(rel=1e-13),
) -> tuple[Fn, Fn]:
    """Bounded second solution ``chi = phi * int_r^inf dt/phi^2`` and its derivative.

    The integral is tabulated once on geometric knots from ``r_lo`` out to the
    cutoff where ``phi`` matches its asymptote ``A r^(ell+1) + B r^-ell``; the
    rest is the integral of the asymptote itself.
    """
    if tail.kind != "linear-asymptote" or not tail.A > 0:
        raise TailDivergence(f"chi_from_phi needs a linear asymptote with A > 0, got {tail}")
    A, B = tail.A, tail.B

    def model(t):
        return A * t ** (ell + 1) + B * t ** (-ell)

    R = max(1.0, 4.0 * abs(B / A) ** (1.0 / (2 * ell + 1)), 2.0 * r_lo)
    while True:
        if R > 1e9:
            raise TailDivergence("phi never approaches its asymptote A r^(ell+1) + B r^-ell")
        if abs(float(phi(R)) / model(R) - 1.0) < 0.5 * TAIL_MATCH:
            break
        R *= 2.0

    # singular potentials: phi underflows near the origin, start the table where 1/phi^2 is finite
    while float(phi(r_lo)) < 1e-150:
        if float(phi(r_lo)) < 0:
            break
        r_lo *= 2.0
        if r_lo >= R:
            raise NoBoundStateViolation("phi vanishes on the whole probed range")
    probe = np.geomspace(r_lo, R, 2000)
    negative = _arr(phi(probe)) <= 0
    if np.any(negative):
        raise NoBoundStateViolation(f"phi changes sign near r = {probe[np.argmax(negative)]:.6g}")

    if ell == 0:
        remainder = 1.0 / (A * (A * R + B))
    else:
        remainder = quad_finite(lambda t: 1.0 / model(t) ** 2, R, 1e3 * R, tol) + 1.0 / (
            A * A * (2 * ell + 1) * (1e3 * R) ** (2 * ell + 1)
        )

    def inv_sq(t):
        return 1.0 / float(phi(t)) ** 2

    knots = np.geomspace(r_lo, R, max(16, int(4 * math.log2(R / r_lo))))
    table = CumulativeQuad(inv_sq, knots, tol)
    head_tol = Tolerance(rel=max(tol.rel, 1e-9))

    def tail_integral(r):
        if r == 0.0:
            return math.inf
        if r < r_lo:
            # phi loses relative accuracy near the origin for cancelling closed forms
            return quad_finite(inv_sq, r, r_lo, head_tol) + table.rcum[0] + remainder
        return table.to_last(r) + remainder

    tail_integral_v = np.vectorize(tail_integral, otypes=[float])

    def chi(r):
        r = _arr(r)
        with np.errstate(invalid="ignore"):
            val = _arr(phi(r)) * tail_integral_v(r)
        if ell == 0:
            val = np.where(r == 0, 1.0, val)
        else:
            val = np.where(r == 0, np.inf, val)
        return _out(val)

    def dchi(r):
        r = _arr(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            val = _arr(dphi(r)) * tail_integral_v(r) - 1.0 / _arr(phi(r))
        return _out(np.where(r == 0, np.nan, val))

    return chi, dchi


def phi_from_chi(chi: Fn, dchi: Fn, r_max: float = 1e4, tol: Tolerance = Tolerance(rel=1e-13)) -> tuple[Fn, Fn]:
    """Regular solution ``phi = chi * int_0^r dt/chi^2`` for an ``ell = 0`` pair.

    ``chi`` must be positive and finite from the origin out to ``r_max`` and
    level off to ``chi(inf) = 1/A > 0``; a decaying ``chi`` (``A = inf``) is
    rejected.
    """
    probe = np.concatenate([[0.0], np.geomspace(1e-6, r_max, 2000)])
    c = _arr(chi(probe))
    bad = ~np.isfinite(c) | (c <= 0)
    if np.any(bad):
        raise DomainError(f"chi vanishes or is not finite near r = {probe[np.argmax(bad)]:.6g}")
    if c[-1] / _arr(chi(0.5 * r_max)) < 1.0 - 1e-3:
        raise NotAdmissible(f"chi keeps decaying at r = {r_max:g}: chi(inf) = 0 gives A = inf")
    return phi_from_chi_quadrature(chi, dchi, r_max=r_max, tol=tol)


# ------------------------------------------------------------- mapping


@dataclass(frozen=True)
class MappingFn:
    """Change of variable ``x = phi0/chi0`` with ``dx/dr = 1/chi0^2``.

    ``inverse`` brackets on a precomputed table and refines with safeguarded
    Newton; the table is built once, so concurrent readers need no locking.
    """

    pair: SolutionPair = field(repr=False)
    r_max: float
    r_table: np.ndarray = field(repr=False)
    x_table: np.ndarray = field(repr=False)
    tol: Tolerance = Tolerance(rel=1e-14)

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, self.r_max)

    def forward(self, r):
        r = _arr(r)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
            x = _arr(self.pair.phi(r)) / _arr(self.pair.chi(r))
        return _out(np.where(r == 0, 0.0, x))

    def derivative(self, r):
        r = _arr(r)
        with np.errstate(over="ignore", under="ignore"):
            return _out(1.0 / _arr(self.pair.chi(r)) ** 2)

    def second_derivative(self, r):
        r = _arr(r)
        return _out(-2.0 * _arr(self.pair.dchi(r)) / _arr(self.pair.chi(r)) ** 3)

    def _inverse_scalar(self, x: float) -> float:
        if x <= 0.0:
            if x < 0:
                raise DomainError(f"x = {x} outside the image [0, inf) of the mapping")
            return 0.0
        xt, rt = self.x_table, self.r_table
        i = int(np.searchsorted(xt, x))
        if i < len(xt) and xt[i] == x:
            return float(rt[i])
        if i == 0:
            # walk down geometrically so the final bracket is [r, 2r], never [0, r]
            lo, hi = 0.5 * float(rt[0]), float(rt[0])
            while float(self.forward(lo)) > x:
                if lo < 1e-300:
                    return 0.0
                lo, hi = 0.5 * lo, lo
        elif i < len(xt):
            lo, hi = float(rt[i - 1]), float(rt[i])
        else:
            lo, hi = float(rt[-1]), 2.0 * float(rt[-1])
            limit = self.pair.domain[1]
            while float(self.forward(hi)) < x:
                lo, hi = hi, 2.0 * hi
                if hi > 1e12 or hi > 2 * limit:
                    raise DomainError(f"x = {x:g} lies beyond the mapping's reachable range")
            if hi > limit:
                hi = limit
        return invert_monotone(lambda r: float(self.forward(r)), x, (lo, hi), self.tol,
                               dm=lambda r: float(self.derivative(r)))

    def inverse(self, x):
        x = _arr(x)
        out = np.vectorize(self._inverse_scalar, otypes=[float])(x)
        return _out(out)


def build_mapping(pair: SolutionPair, r_max: float = DEFAULT_R_MAX, tol: Tolerance = Tolerance(rel=1e-14)) -> MappingFn:
    if not pair.no_bound_states or pair.chi is None:
        raise AdmissibilityError("mapping needs a nodeless base pair with a second solution")
    r_max = min(r_max, pair.domain[1])
    lo = max(pair.domain[0], 1e-6 * r_max)
    r_table = np.geomspace(lo, r_max, 512)
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        x_table = _arr(pair.phi(r_table)) / _arr(pair.chi(r_table))
    keep = np.isfinite(x_table) & (x_table > 0)
    r_table, x_table = r_table[keep], x_table[keep]
    if np.any(np.diff(x_table) <= 0):
        raise AdmissibilityError("x = phi0/chi0 is not strictly increasing on the base pair's domain")
    return MappingFn(pair, r_max, r_table, x_table, tol)


# ------------------------------------------------------------- composition


@dataclass(frozen=True)
class ComposedSystem:
    """A composed potential bundled with its regular solution.

    ``potential_value`` includes the centrifugal term; ``as_potential()``
    returns it without (``ell`` carried separately, as for every
    ``PotentialSpec``).
    """

    base: SolutionPair
    inner: PotentialSpec
    inner_phi: Fn = field(repr=False)
    inner_dphi: Fn = field(repr=False)
    mapping: MappingFn = field(repr=False)
    depth: int = 1
    provenance: tuple[str, ...] = ()
    inner_closed_form: bool = True

    @property
    def ell(self) -> int:
        return self.base.ell

    @property
    def r_max(self) -> float:
        return self.mapping.r_max

    def _guard(self, r):
        if self.base.potential.tail_class == "long-range" and np.any(r > self.r_max * (1 + GUARD_SLACK)):
            raise DomainError(
                f"long-range base: composed system only defined for r <= {self.r_max:g}"
            )

    def added_potential(self, r):
        """``chi0^-4 V1(x(r))``."""
        r = _arr(r)
        self._guard(r)
        chi = _arr(self.base.chi(r))
        x = _arr(self.mapping.forward(r))
        with np.errstate(over="ignore", under="ignore"):
            return _out(_arr(self.inner.evaluate(x)) / chi**4)

    def potential_value(self, r, centrifugal: bool = True):
        r = _arr(r)
        v = _arr(self.base.potential.evaluate(r)) + _arr(self.added_potential(r))
        if centrifugal and self.ell:
            v = v + self.ell * (self.ell + 1) / r**2
        return _out(v)

    def as_potential(self) -> PotentialSpec:
        tail = "long-range" if self.base.potential.tail_class == "long-range" else "short-range"
        return PotentialSpec(
            lambda r: self.potential_value(r, centrifugal=False),
            self.ell,
            self.base.potential.origin_class,
            tail,
            params={"depth": self.depth},
            family="composed",
        )

    def phi(self, r):
        """``chi0(r) * phi1(x(r))``."""
        r = _arr(r)
        self._guard(r)
        chi = _arr(self.base.chi(r))
        x = _arr(self.mapping.forward(r))
        with np.errstate(invalid="ignore"):
            val = chi * _arr(self.inner_phi(x))
        return _out(np.where(x == 0, 0.0, val))

    def dphi(self, r):
        """``chi0' phi1(x) + phi1'(x)/chi0``."""
        r = _arr(r)
        self._guard(r)
        chi = _arr(self.base.chi(r))
        x = _arr(self.mapping.forward(r))
        with np.errstate(invalid="ignore"):
            val = _arr(self.base.dchi(r)) * _arr(self.inner_phi(x)) + _arr(self.inner_dphi(x)) / chi
        # phi1(0) = 0 kills a possibly infinite chi0' at the origin
        with np.errstate(divide="ignore", invalid="ignore"):
            at0 = np.where(np.isfinite(chi), _arr(self.inner_dphi(0.0)) / chi, 0.0)
        return _out(np.where(x == 0, at0, val))


def _admissibility(base: SolutionPair, inner: PotentialSpec) -> list[str]:
    problems = []
    if not base.no_bound_states:
        problems.append("base potential must have no bound states")
    if base.chi is None:
        problems.append("base pair has no second solution chi0")
    if base.tail.kind == "linear-asymptote" and not base.tail.A > 0:
        problems.append("base pair tail slope A must be positive")
    if inner.ell != 0:
        problems.append("inner potential must be an ell = 0 potential")
    if inner.origin_class != "regular":
        problems.append("inner potential must satisfy int_0^1 r|V1| dr < inf (regular at the origin)")
    if inner.tail_class != "short-range":
        problems.append("inner potential must satisfy int_1^inf r^2 |V1| dr < inf (short range)")
    return problems


def compose(
    base: SolutionPair,
    inner: PotentialSpec,
    inner_solution: Optional[tuple[Fn, Fn]] = None,
    r_max: Optional[float] = None,
    tol: Tolerance = DEFAULT_TOL,
) -> ComposedSystem:
    """Compose ``base`` (no bound states) with ``inner`` (any number of bound states).

    Without ``inner_solution`` the catalog closed form is used when one exists;
    otherwise ``phi1`` is integrated once on ``[0, x_max]`` and interpolated.
    """
    problems = _admissibility(base, inner)
    if problems:
        raise AdmissibilityError("; ".join(problems))
    if r_max is None:
        r_max = min(DEFAULT_R_MAX, base.domain[1])
    mapping = build_mapping(base, r_max)
    closed = True
    if inner_solution is None:
        inner_solution = closed_form_regular(inner)
    if inner_solution is None:
        closed = False
        x_max = float(mapping.forward(mapping.r_max)) * 1.1 + 1.0
        # past X_INNER_MAX the linear continuation of phi1 is exact for any short-range V1
        sol = RegularSolution(inner, min(x_max, X_INNER_MAX), Tolerance(rel=min(tol.rel, 1e-12)))
        inner_solution = (sol, sol.derivative)
    phi1, dphi1 = inner_solution
    prov = (f"base={base.family}{_fmt(base.potential.params)}", f"inner={inner.family}{_fmt(inner.params)}")
    return ComposedSystem(base, inner, phi1, dphi1, mapping, 1, prov, closed)


def _fmt(params) -> str:
    if not params:
        return ""
    return "(" + ",".join(f"{k}={v:g}" for k, v in params.items()) + ")"


def compose_solution(sys: ComposedSystem) -> Fn:
    """The composed regular solution as a function of ``r``."""
    return sys.phi


def iterate(
    base: SolutionPair,
    inner: PotentialSpec,
    depth: int,
    inner_solution: Optional[tuple[Fn, Fn]] = None,
    r_max: Optional[float] = None,
    max_depth: int = MAX_DEPTH,
    tol: Tolerance = DEFAULT_TOL,
) -> ComposedSystem:
    """Apply the composition ``depth`` times with the same base pair."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth > max_depth:
        raise DepthLimit(f"depth {depth} exceeds the configured maximum {max_depth}")
    if depth > 1 and base.ell != 0:
        raise AdmissibilityError("iteration needs an ell = 0 base: the composed potential becomes the ell = 0 inner")
    sys = compose(base, inner, inner_solution, r_max, tol)
    for k in range(2, depth + 1):
        prev = sys
        nxt = compose(base, prev.as_potential(), (prev.phi, prev.dphi), r_max, tol)
        sys = replace(nxt, depth=k, provenance=prev.provenance + (f"iterate depth={k}",),
                      inner_closed_form=prev.inner_closed_form)
    return sys


# --------------------------------------------------------- mapped equation


def mapped_equation_solution(sys: ComposedSystem, x_end: float, tol: Tolerance = Tolerance(rel=1e-12)) -> GridSample:
    """Solve ``psi'' = [chi0^4 * Vadd](r(x)) psi`` in the mapped variable.

    ``Vadd`` is the composed potential minus ``V0`` and the centrifugal term,
    read back through the inverse map. The result should coincide with the
    inner regular solution ``phi1``.
    """

    def W(x):
        x = _arr(x)
        r = _arr(sys.mapping.inverse(x))
        added = _arr(sys.potential_value(r, centrifugal=True)) - _arr(sys.base.potential.evaluate(r))
        if sys.ell:
            added = added - sys.ell * (sys.ell + 1) / r**2
        return _out(_arr(sys.base.chi(r)) ** 4 * added)

    mapped = PotentialSpec(W, 0, family="mapped")
    return solve_zero_energy_ivp(mapped, 0.0, 0.0, 1.0, x_end, tol)
