"""Numerical kernels: semi-infinite quadrature, zero-energy radial IVP
integration and inversion of monotone maps.

Everything here is a pure function of its inputs. The heavy lifting is
delegated to QUADPACK (``scipy.integrate.quad``) and the DOP853 pair of
``scipy.integrate.solve_ivp``; this module adds the pieces they lack for the
radial problem: analytic tails beyond a cutoff, geometric splitting near
steep ends, series starts at the origin and an overflow cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Protocol, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import BadTail, NonConvergent, NotBracketed, Overflow, StepUnderflow

ScalarFn = Callable[[float], float]

OVERFLOW_CAP = 1e300
# relative mismatch between f and its fitted tail at which the cutoff is placed
TAIL_MATCH = 1e-9
_R_PROBE_MAX = 1e12


@dataclass(frozen=True)
class Tolerance:
    rel: float = 1e-10
    abs: float = 0.0
    max_steps: int = 200

    def __post_init__(self):
        if not self.rel > 0:
            raise ValueError(f"Tolerance.rel must be > 0, got {self.rel}")
        if not self.abs >= 0:
            raise ValueError(f"Tolerance.abs must be >= 0, got {self.abs}")
        if int(self.max_steps) < 1:
            raise ValueError(f"Tolerance.max_steps must be >= 1, got {self.max_steps}")

    def scaled(self, factor: float) -> "Tolerance":
        return Tolerance(self.rel * factor, self.abs * factor, self.max_steps)


DEFAULT_TOL = Tolerance()

TOLERANCE_PROFILES = {
    "strict": Tolerance(rel=1e-12, abs=0.0, max_steps=500),
    "default": DEFAULT_TOL,
    "fast": Tolerance(rel=1e-8, abs=0.0, max_steps=100),
}


@dataclass(frozen=True)
class TailModel:
    """Large-r behaviour of a function.

    ``linear-asymptote``: the function is ``A*r + B + o(1)`` (for an ``ell``
    wave, ``A*r**(ell+1) + B*r**(-ell)``). ``power-decay``: an integrand that
    falls off like an inverse power, exponent probed numerically.
    """

    kind: Literal["linear-asymptote", "power-decay", "none"] = "none"
    A: float = 0.0
    B: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear-asymptote", "power-decay", "none"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.kind == "linear-asymptote" and not self.A > 0:
            raise ValueError(f"linear-asymptote tail needs A > 0, got A={self.A}")


@dataclass(frozen=True)
class GridSample:
    r: np.ndarray
    y: np.ndarray
    dy: Optional[np.ndarray] = None
    # (y, dy) at arbitrary radii inside [r[0], r[-1]]
    dense: Optional[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "y", y)
        if r.ndim != 1 or len(r) < 2:
            raise ValueError("GridSample needs at least two radii")
        if y.shape != r.shape:
            raise ValueError("r and y must have equal length")
        if self.dy is not None:
            dy = np.asarray(self.dy, dtype=float)
            if dy.shape != r.shape:
                raise ValueError("r and dy must have equal length")
            object.__setattr__(self, "dy", dy)
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        if r[0] < 0:
            raise ValueError("radii must be non-negative")


@dataclass(frozen=True)
class GridSpec:
    """Radial sampling grid, e.g. ``GridSpec.parse("log:1e-2,20,400")``."""

    r_min: float
    r_max: float
    points: int
    spacing: Literal["linear", "log"] = "log"

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("grid needs at least 2 points")
        if self.r_min < 0:
            raise ValueError("grid r_min must be >= 0")
        if not self.r_max > self.r_min:
            raise ValueError("grid r_max must exceed r_min")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "log" and self.r_min <= 0:
            raise ValueError("log grid needs r_min > 0")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        kind, _, rest = text.partition(":")
        parts = rest.split(",")
        if kind not in ("log", "linear", "lin") or len(parts) != 3:
            raise ValueError(f"bad grid spec {text!r}; expected log:rmin,rmax,points")
        return cls(float(parts[0]), float(parts[1]), int(parts[2]),
                   "linear" if kind.startswith("lin") else "log")

    def radii(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.r_min, self.r_max, self.points)
        return np.linspace(self.r_min, self.r_max, self.points)


class _Potential(Protocol):
    ell: int

    def evaluate(self, r): ...


# ---------------------------------------------------------------- quadrature


def _breakpoints(a: float, b: float) -> list[float]:
    """Geometric breakpoints so each piece spans at most a factor of two in r."""
    if b <= a:
        return [a, b]
    pts = [a]
    x = a if a > 0 else min(b, 1.0) / 2.0**20
    if a == 0:
        pts.append(x)
    while 2.0 * x < b:
        x *= 2.0
        pts.append(x)
    pts.append(b)
    return pts


def _quad_piece(f: ScalarFn, a: float, b: float, tol: Tolerance) -> tuple[float, float]:
    res = quad(f, a, b, epsabs=tol.abs, epsrel=max(tol.rel * 0.1, 2e-14),
               limit=int(tol.max_steps), full_output=1)
    if len(res) == 4:
        val, err, info, msg = res
        # roundoff-limited results are still accepted when the error estimate is tiny
        if err > max(tol.abs, tol.rel * abs(val)):
            raise NonConvergent(f"quadrature on [{a:g}, {b:g}] failed: {msg.strip()}")
    return res[0], res[1]


def quad_finite(f: ScalarFn, a: float, b: float, tol: Tolerance = DEFAULT_TOL) -> float:
    """Adaptive quadrature of ``f`` over ``[a, b]`` with geometric splitting."""
    if b == a:
        return 0.0
    if b < a:
        return -quad_finite(f, b, a, tol)
    pts = _breakpoints(a, b)
    return math.fsum(_quad_piece(f, lo, hi, tol)[0] for lo, hi in zip(pts[:-1], pts[1:]))


def _linear_cutoff(f: ScalarFn, a: float, tail: TailModel) -> float:
    A, B = tail.A, tail.B
    R = max(2.0 * a, 1.0, 4.0 * abs(B) / A)
    while R < _R_PROBE_MAX:
        s = A * R + B
        if s > 0 and abs(f(R) * s * s - 1.0) < TAIL_MATCH:
            return R
        R *= 2.0
    raise BadTail("integrand never matched 1/(A r + B)^2 within the probed range")


def integrate_improper(
    f: ScalarFn,
    a: float,
    tail: TailModel = TailModel("none"),
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Integral of ``f`` over ``[a, inf)``.

    For ``linear-asymptote`` tails ``f`` is taken to behave like
    ``1/(A t + B)**2`` (the reciprocal square of a nodeless regular solution);
    the cutoff ``R`` is placed where that form matches ``f`` to ``TAIL_MATCH``
    and the remainder ``1/(A (A R + B))`` is added analytically. For
    ``power-decay`` the exponent is probed from two radii and the power-law
    remainder added. With ``none`` the range is doubled until the integral
    settles.
    """
    if tail.kind == "linear-asymptote":
        R = _linear_cutoff(f, a, tail)
        return quad_finite(f, a, R, tol) + 1.0 / (tail.A * (tail.A * R + tail.B))

    R = max(2.0 * a, 1.0)
    total = quad_finite(f, a, R, tol)
    previous = None
    for _ in range(int(tol.max_steps)):
        if R > _R_PROBE_MAX:
            break
        # pieces far out only need accuracy relative to the running total
        piece_tol = Tolerance(tol.rel, max(tol.abs, 0.1 * tol.rel * abs(total)), tol.max_steps)
        total += quad_finite(f, R, 2.0 * R, piece_tol)
        R *= 2.0
        remainder = 0.0
        if tail.kind == "power-decay":
            f1, f2 = abs(f(R / 2.0)), abs(f(R))
            if f2 == 0.0:
                return total
            p = math.log(f1 / f2) / math.log(2.0) if f1 > 0 else 0.0
            if p <= 1.0:
                previous = None
                continue
            remainder = f(R) * R / (p - 1.0)
        estimate = total + remainder
        if previous is not None and abs(estimate - previous) <= tol.rel * abs(estimate) + tol.abs:
            return estimate
        previous = estimate
    else:
        raise NonConvergent("tail probing exhausted max_steps")
    raise BadTail("integrand does not decay integrably within the probed range")


class CumulativeQuad:
    """Running integral of ``f`` tabulated on fixed knots.

    ``between(a, b)`` reuses the table for whole knot intervals and only
    integrates the partial end pieces, which keeps repeated evaluation of
    ``int_a^b f`` on dense grids cheap. Immutable after construction.
    """

    def __init__(self, f: ScalarFn, knots: Sequence[float], tol: Tolerance = DEFAULT_TOL):
        self.f = f
        self.tol = tol
        self.knots = np.asarray(knots, dtype=float)
        pieces = [quad_finite(f, lo, hi, tol) for lo, hi in zip(self.knots[:-1], self.knots[1:])]
        self.cum = np.concatenate([[0.0], np.cumsum(pieces)])
        # summed from the far end so integrands that blow up at the first knot lose nothing
        self.rcum = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])

    def from_first(self, r: float) -> float:
        """Integral from the first knot to ``r``."""
        k = self.knots
        if r <= k[0]:
            return -quad_finite(self.f, r, k[0], self.tol)
        if r >= k[-1]:
            return self.cum[-1] + quad_finite(self.f, k[-1], r, self.tol)
        i = int(np.searchsorted(k, r, side="right")) - 1
        lo, hi = k[i], k[i + 1]
        if r - lo <= hi - r:
            return self.cum[i] + quad_finite(self.f, lo, r, self.tol)
        return self.cum[i + 1] - quad_finite(self.f, r, hi, self.tol)

    def to_last(self, r: float) -> float:
        """Integral from ``r`` to the last knot."""
        k = self.knots
        if r >= k[-1]:
            return -quad_finite(self.f, k[-1], r, self.tol)
        if r <= k[0]:
            return quad_finite(self.f, r, k[0], self.tol) + self.rcum[0]
        i = int(np.searchsorted(k, r, side="right")) - 1
        lo, hi = k[i], k[i + 1]
        if r - lo <= hi - r:
            return self.rcum[i] - quad_finite(self.f, lo, r, self.tol)
        return self.rcum[i + 1] + quad_finite(self.f, r, hi, self.tol)

    def between(self, a: float, b: float) -> float:
        return self.from_first(b) - self.from_first(a)


# ------------------------------------------------------------------ ODE solve


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def series_start(potential: _Potential, r0: float) -> tuple[float, float]:
    """Regular-solution start ``r**(ell+1)/(2 ell+1)!! * (1 + c r**2)``.

    ``c = V(r0)/(4 ell + 6)`` is the first correction for a potential that is
    roughly constant near the origin.
    """
    ell = int(potential.ell)
    norm = 1.0 / double_factorial(2 * ell + 1)
    v = float(potential.evaluate(r0))
    c = v / (4 * ell + 6) if math.isfinite(v) else 0.0
    y0 = norm * r0 ** (ell + 1) * (1.0 + c * r0 * r0)
    dy0 = norm * ((ell + 1) * r0**ell + c * (ell + 3) * r0 ** (ell + 2))
    return y0, dy0


def auto_start_radius(potential: _Potential, tol: Tolerance = DEFAULT_TOL) -> float:
    """Start radius for ``series_start``: never below ``1e-4``, larger when the
    first neglected series term ``(V r0^2)^2`` is already below tolerance."""
    target = max(tol.abs, tol.rel)
    r0 = 1e-2
    while r0 > 1e-4:
        v = abs(float(potential.evaluate(r0)))
        if math.isfinite(v) and (v * r0 * r0) ** 2 < target:
            return r0
        r0 /= 2.0
    return 1e-4


def solve_zero_energy_ivp(
    potential: _Potential,
    r0: float,
    y0: float,
    dy0: float,
    r_end: float,
    tol: Tolerance = DEFAULT_TOL,
    r_eval: Optional[np.ndarray] = None,
    cap: float = OVERFLOW_CAP,
    max_step: float = np.inf,
) -> GridSample:
    """Integrate ``y'' = [V(r) + ell(ell+1)/r^2] y`` from ``r0`` to ``r_end``.

    DOP853 with dense output. Starting at ``r0 = 0`` is allowed for ``ell = 0``
    potentials with ``r V(r)`` bounded at the origin; the acceleration there is
    the limit ``r V(r) * y'(0)``.
    """
    ell = int(potential.ell)
    if r0 == 0 and ell > 0:
        raise ValueError("ell > 0 requires r0 > 0 (use series_start)")
    if r_end <= r0:
        raise ValueError("r_end must exceed r0")
    cent = float(ell * (ell + 1))
    ev = potential.evaluate
    r_tiny = 1e-12

    def rhs(r, s):
        y, dy = s
        if r == 0.0:
            return np.array([dy, r_tiny * float(ev(r_tiny)) * dy])
        if cent:
            return np.array([dy, (float(ev(r)) + cent / (r * r)) * y])
        return np.array([dy, float(ev(r)) * y])

    def blowup(r, s):
        return cap - abs(s[0])

    blowup.terminal = True

    # y0 = 0 with atol ~ 0 defeats the automatic initial-step estimate
    first_step = min(1e-4, 0.1 * (r_end - r0), max_step) if y0 == 0 else None
    sol = solve_ivp(rhs, (r0, r_end), [y0, dy0], method="DOP853", rtol=tol.rel,
                    atol=max(tol.abs, 1e-300), dense_output=True, events=blowup,
                    max_step=max_step, first_step=first_step)
    if sol.status == 1:
        raise Overflow(f"|y| exceeded {cap:g} at r={sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        raise StepUnderflow(f"integration failed at r={sol.t[-1]:.6g}: {sol.message}")
    if not np.all(np.isfinite(sol.y)):
        raise Overflow("non-finite solution values")

    dense_sol = sol.sol

    def dense(r):
        out = dense_sol(np.asarray(r, dtype=float))
        return out[0], out[1]

    if r_eval is None:
        r_out = sol.t
        y, dy = sol.y
    else:
        r_out = np.asarray(r_eval, dtype=float)
        y, dy = dense(r_out)
    return GridSample(r_out, y, dy, dense=dense)


# -------------------------------------------------------------- inversion


def invert_monotone(
    m: ScalarFn,
    x_target: float,
    bracket: tuple[float, float],
    tol: Tolerance = DEFAULT_TOL,
    dm: Optional[ScalarFn] = None,
) -> float:
    """Solve ``m(r) = x_target`` for strictly increasing ``m`` on ``bracket``.

    With ``dm`` this is a bisection-safeguarded Newton iteration; without it
    Brent's method.
    """
    lo, hi = bracket
    f_lo, f_hi = m(lo) - x_target, m(hi) - x_target
    if f_lo > 0 or f_hi < 0:
        raise NotBracketed(
            f"target {x_target!r} outside [{m(lo)!r}, {m(hi)!r}] on [{lo}, {hi}]"
        )
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if dm is None:
        return brentq(lambda r: m(r) - x_target, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                      maxiter=max(int(tol.max_steps), 100))

    r = 0.5 * (lo + hi)
    for _ in range(max(int(tol.max_steps), 200)):
        fr = m(r) - x_target
        if fr == 0:
            return r
        if fr < 0:
            lo = r
        else:
            hi = r
        d = dm(r)
        step_ok = False
        if d > 0 and math.isfinite(d):
            r_new = r - fr / d
            step_ok = lo < r_new < hi
        if not step_ok:
            r_new = 0.5 * (lo + hi)
        if abs(r_new - r) <= 4 * np.finfo(float).eps * abs(r_new) or hi - lo <= 4 * np.finfo(float).eps * abs(hi):
            r = r_new
            break
        r = r_new
    return r


# ------------------------------------------------- tabulated regular solution


class RegularSolution:
    """Regular zero-energy solution integrated once and interpolated.

    Nodes are the integrator's steps subdivided through its dense output; at
    each node value, slope and curvature (``V_eff * y``, exact from the ODE)
    feed a C2 quintic Hermite interpolant. Past ``r_max`` the solution is
    continued linearly, which is exact once the potential has died out.
    """

    def __init__(self, potential: _Potential, r_max: float, tol: Tolerance = Tolerance(rel=1e-12),
                 subdivide: int = 6, max_step: float = 0.25):
        from scipy.interpolate import BPoly

        self.potential = potential
        self.ell = int(potential.ell)
        if self.ell == 0:
            r0 = 0.0
            y0, dy0 = 0.0, 1.0
        else:
            r0 = auto_start_radius(potential, tol)
            y0, dy0 = series_start(potential, r0)
        # the step cap doubles on each segment past 32, where the solution is close to linear
        ends = [r_max] if r_max <= 32.0 else [32.0 * 2.0**k for k in range(int(np.log2(r_max / 32.0)) + 1)]
        if ends[-1] < r_max:
            ends.append(r_max)
        frac = np.linspace(0.0, 1.0, subdivide + 1)[:-1]
        parts_r, parts_y, parts_dy = [], [], []
        start, ys, dys, cap = r0, y0, dy0, max_step
        for end in ends:
            if end <= start:
                continue
            sample = solve_zero_energy_ivp(potential, start, ys, dys, end, tol, max_step=cap)
            steps = sample.r
            seg = np.concatenate([(a + (b - a) * frac) for a, b in zip(steps[:-1], steps[1:])])
            y_seg, dy_seg = sample.dense(seg)
            parts_r.append(seg)
            parts_y.append(y_seg)
            parts_dy.append(dy_seg)
            start, ys, dys, cap = float(steps[-1]), float(sample.y[-1]), float(sample.dy[-1]), 2.0 * cap
        nodes = np.concatenate(parts_r + [[start]])
        y = np.concatenate(parts_y + [[ys]])
        dy = np.concatenate(parts_dy + [[dys]])
        cent = self.ell * (self.ell + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            veff = np.asarray(potential.evaluate(nodes), dtype=float) + cent / nodes**2
            d2y = np.where(nodes > 0, veff * y, 0.0)
        if nodes[0] == 0.0:
            # y'' -> lim r V(r) * y'(0) at a regular origin
            d2y[0] = 1e-12 * float(potential.evaluate(1e-12)) * dy[0]
        self.r0 = float(nodes[0])
        self.r_max = float(nodes[-1])
        self._y0 = float(y[0])
        self._y_end, self._dy_end = float(y[-1]), float(dy[-1])
        self._poly = BPoly.from_derivatives(nodes, np.column_stack([y, dy, d2y]))
        self._dpoly = self._poly.derivative()

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = np.clip(r, self.r0, self.r_max)
        out = np.where(r > self.r_max, self._y_end + self._dy_end * (r - self.r_max), self._poly(inside))
        if self.r0 > 0:
            # leading r^(ell+1) behaviour below the series start
            out = np.where(r < self.r0, self._y0 * (np.maximum(r, 0.0) / self.r0) ** (self.ell + 1), out)
        return out if out.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        inside = np.clip(r, self.r0, self.r_max)
        out = np.where(r > self.r_max, self._dy_end, self._dpoly(inside))
        if self.r0 > 0:
            k = self.ell + 1
            out = np.where(r < self.r0, k * self._y0 / self.r0 * (np.maximum(r, 0.0) / self.r0) ** self.ell, out)
        return out if out.ndim else float(out)
