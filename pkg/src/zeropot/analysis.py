"""Independent checks on solution pairs and composed systems.

Every check here works from function values only: second derivatives come
from finite-difference stencils, tails from least-squares fits and node
counts from sign scans, so none of them trusts the closed forms it audits.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .catalog import FAMILIES, PotentialSpec, SolutionPair, make_pair, potential
from .errors import NonConvergent, PoorFit, Unstable, ZeropotError
from .numerics import GridSpec, TailModel, Tolerance, integrate_improper, quad_finite
from .transform import ComposedSystem, compose, iterate

Fn = Callable[[np.ndarray], np.ndarray]

RESIDUAL_GATE = 1e-6
WRONSKIAN_GATE = 1e-8
A_MIN = 1e-6
FIT_GATE = 1e-7


def _arr(r):
    return np.asarray(r, dtype=float)


def _radii(grid) -> np.ndarray:
    if isinstance(grid, GridSpec):
        return grid.radii()
    if isinstance(grid, str):
        return GridSpec.parse(grid).radii()
    return _arr(grid)


def working_grid(domain: tuple[float, float], points: int = 400, lo: float = 1e-3, hi: float = 50.0) -> np.ndarray:
    """Log grid on ``[max(lo, domain[0]), min(hi, domain[1])]``."""
    return np.geomspace(max(lo, domain[0]), min(hi, domain[1]), points)


# ------------------------------------------------------------------ residual


_STEP_LADDER = np.geomspace(2e-1, 1e-5, 10)
# second differences of values lose eps/h^2, so they want coarser steps
_STEP_LADDER_VALUES = np.geomspace(1e-1, 1e-3, 5)


def _d2(sol: Fn, dsol: Optional[Fn], r: np.ndarray, h: np.ndarray) -> np.ndarray:
    if dsol is not None:
        return (-_arr(dsol(r + 2 * h)) + 8 * _arr(dsol(r + h)) - 8 * _arr(dsol(r - h)) + _arr(dsol(r - 2 * h))) / (12 * h)
    return (
        -_arr(sol(r + 2 * h)) + 16 * _arr(sol(r + h)) - 30 * _arr(sol(r)) + 16 * _arr(sol(r - h)) - _arr(sol(r - 2 * h))
    ) / (12 * h * h)


def second_derivative(sol: Fn, r: np.ndarray, dsol: Optional[Fn] = None,
                      domain: tuple[float, float] = (0.0, math.inf)) -> np.ndarray:
    """Five-point central differences (of ``dsol`` when given, else of ``sol``).

    The step is picked per point from a ladder ``h = c r``: the pair of
    neighbouring rungs that agree best brackets the sweet spot between
    truncation and roundoff, and the finer rung of that pair is returned.
    Rungs whose stencil leaves ``domain`` are skipped.
    """
    r = _arr(r)
    lo, hi = domain
    ladder = _STEP_LADDER if dsol is not None else _STEP_LADDER_VALUES
    est = np.full((len(ladder), r.size), np.nan)
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        for j, c in enumerate(ladder):
            inside = (r - 2 * c * r >= lo) & (r + 2 * c * r <= hi)
            if np.any(inside):
                est[j, inside] = _d2(sol, dsol, r[inside], c * r[inside])
    gap = np.abs(np.diff(est, axis=0))
    gap = np.where(np.isfinite(gap), gap, np.inf)
    k = np.argmin(gap, axis=0)
    out = np.take_along_axis(est, (k + 1)[None, :], axis=0)[0]
    # no two usable rungs: take the finest one that fits
    lone = ~np.isfinite(gap).any(axis=0)
    if np.any(lone):
        finite = np.isfinite(est)
        last = est.shape[0] - 1 - np.argmax(finite[::-1], axis=0)
        out = np.where(lone, est[last, np.arange(r.size)], out)
    return out


def residual_profile(V: PotentialSpec, sol: Fn, grid, dsol: Optional[Fn] = None,
                     domain: tuple[float, float] = (0.0, math.inf)) -> np.ndarray:
    """Pointwise ``|phi'' - V_eff phi| / (|V_eff phi| + floor)``.

    The floor at ``r`` is ``1e-3`` times the larger of ``max |V_eff phi|`` and
    ``max |phi| / r^2``, both taken over grid points in ``[r/2, 2r]``.
    A local window still shields the zeros of ``phi`` but keeps a solution
    that spans many decades (``e^{1/r}`` near a singular origin) from hiding
    errors elsewhere. ``|phi| / r^2`` is the natural size of ``phi''`` and
    takes over where ``V`` has died out or vanishes identically.
    """
    r = _radii(grid)
    if np.any(r <= 0):
        raise ValueError("residual needs r > 0")
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        y = _arr(sol(r))
        rhs = _arr(V.effective(r)) * y
        d2 = second_derivative(sol, r, dsol, domain)
    rhs = np.where(y == 0, 0.0, rhs)
    floor = 1e-3 * np.maximum(_window_max(r, np.abs(rhs)), _window_max(r, np.abs(y)) / r**2)
    floor = np.where(floor > 0, floor, 1e-300)
    return np.abs(d2 - rhs) / (np.abs(rhs) + floor)


def _window_max(r: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``max v`` over grid points with radius in ``[r_i / 2, 2 r_i]``."""
    order = np.argsort(r)
    rs, vs = r[order], np.where(np.isfinite(v[order]), v[order], 0.0)
    lo = np.searchsorted(rs, 0.5 * rs, "left")
    hi = np.searchsorted(rs, 2.0 * rs, "right")
    out = np.empty_like(rs)
    for i in range(len(rs)):
        out[i] = np.max(vs[lo[i]:hi[i]])
    res = np.empty_like(out)
    res[order] = out
    return res


def residual(V: PotentialSpec, sol: Fn, grid, dsol: Optional[Fn] = None,
             domain: tuple[float, float] = (0.0, math.inf)) -> float:
    """Max relative ODE residual of ``sol`` against ``phi'' = [V + ell(ell+1)/r^2] phi``."""
    prof = residual_profile(V, sol, grid, dsol, domain)
    return float(np.max(np.where(np.isfinite(prof), prof, np.inf)))


# --------------------------------------------------------------------- nodes


def _sign_changes(y: np.ndarray) -> int:
    s = np.sign(y[np.isfinite(y)])
    s = s[s != 0]  # exact zeros are underflow near a singular origin
    return int(np.count_nonzero(s[1:] != s[:-1]))


def count_nodes(sol: Fn, domain: tuple[float, float], ell: int = 0, points: int = 256, max_levels: int = 6) -> int:
    """Sign changes of ``sol`` on ``(r_excl, r_hi]``, refined until two levels agree.

    ``r_excl`` defaults to ``1e-6 r_hi`` (``1e-4 r_hi`` for ``ell > 0``): the
    ``r^(ell+1)`` start has no sign change there, and the structural zero at
    the origin is never sampled.
    """
    lo, hi = domain
    lo = max(lo, (1e-4 if ell else 1e-6) * hi)
    prev = None
    n = points
    for _ in range(max_levels):
        r = np.unique(np.concatenate([np.geomspace(lo, hi, n), np.linspace(lo, hi, n)]))
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            count = _sign_changes(_arr(sol(r)))
        if count == prev:
            return count
        prev = count
        n *= 2
    raise Unstable(f"node count still changing after {max_levels} refinements (last {prev})")


# ------------------------------------------------------------------ bargmann


def bargmann_bound(V1: PotentialSpec, tol: Tolerance = Tolerance(rel=1e-9)) -> float:
    """``int_0^inf r |V1(r)| dr``, an upper bound on the bound-state count."""
    if V1.tail_class == "long-range":
        raise NonConvergent(f"{V1.family}: r|V| is not integrable at infinity for a long-range potential")
    if V1.origin_class == "strongly-singular":
        raise NonConvergent(f"{V1.family}: r|V| is not integrable at the origin")

    def f(t):
        v = abs(float(V1.evaluate(t)))
        return t * v if math.isfinite(v) else 0.0

    head = quad_finite(f, 0.0, 1.0, tol)
    if f(1.0) == 0 and f(2.0) == 0 and f(10.0) == 0 and f(100.0) == 0:
        return head
    return head + integrate_improper(f, 1.0, TailModel("power-decay"), tol)


# ------------------------------------------------------------------ tail fit


@dataclass(frozen=True)
class TailFit:
    """Least-squares ``phi ~ A r^(ell+1) + B r^-ell`` over ``window``."""

    A: float
    B: float
    residual: float
    window: tuple[float, float]
    ell: int = 0

    def as_tail(self) -> TailModel:
        return TailModel("linear-asymptote", self.A, self.B)


def asymptotic_fit(
    sol: Fn,
    ell: int = 0,
    window: Optional[tuple[float, float]] = None,
    r_max: float = 1e4,
    points: int = 200,
    gate: float = FIT_GATE,
) -> TailFit:
    """Fit the zero-energy tail; ``window`` defaults to ``[0.7 r_max, r_max]``.

    Raises PoorFit when the rms relative deviation exceeds ``gate``, which
    means the window still feels the potential.
    """
    lo, hi = window if window is not None else (0.7 * r_max, r_max)
    r = np.linspace(lo, hi, points)
    y = _arr(sol(r))
    s = hi  # column scaling keeps the normal equations well conditioned
    M = np.column_stack([(r / s) ** (ell + 1), (r / s) ** (-ell)])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    A = coef[0] / s ** (ell + 1)
    B = coef[1] * s**ell
    dev = (M @ coef - y) / np.maximum(np.abs(y), 1e-300)
    res = float(np.sqrt(np.mean(dev**2)))
    if not res <= gate:
        raise PoorFit(f"tail fit residual {res:.3g} > {gate:g} on [{lo:g}, {hi:g}]")
    return TailFit(float(A), float(B), res, (float(lo), float(hi)), ell)


# --------------------------------------------------------------- certificate


@dataclass(frozen=True)
class Certificate:
    ok: bool
    node_count: int
    A: Optional[float]
    reason: str

    def __bool__(self):
        return self.ok


def _fit_r_max(pair: SolutionPair) -> float:
    return min(1e4, pair.domain[1])


def certify_no_bound_states(pair: SolutionPair, r_max: Optional[float] = None, A_min: float = A_MIN) -> Certificate:
    """No bound states iff ``phi`` is nodeless on ``(0, r_max]`` and its tail slope exceeds ``A_min``.

    Long-range pairs have no linear tail; they need ``phi`` nodeless and
    growing at the end of the domain instead.
    """
    hi = r_max if r_max is not None else _fit_r_max(pair)
    try:
        nodes = count_nodes(pair.phi, (pair.domain[0], hi), pair.ell)
    except Unstable as exc:
        return Certificate(False, -1, None, f"node count unstable: {exc}")
    if nodes:
        return Certificate(False, nodes, None, f"phi has {nodes} node(s): V has {nodes} bound state(s)")
    if pair.potential.tail_class == "long-range":
        grows = float(pair.dphi(hi)) > 0
        return Certificate(grows, 0, None, "long-range: phi grows at the domain end" if grows else "phi not growing")
    try:
        fit = asymptotic_fit(pair.phi, pair.ell, r_max=hi)
    except PoorFit as exc:
        return Certificate(False, 0, None, str(exc))
    if not fit.A > A_min:
        return Certificate(False, 0, fit.A, f"tail slope A = {fit.A:.3g} <= {A_min:g} (zero-energy resonance or worse)")
    return Certificate(True, 0, fit.A, "nodeless with positive tail slope")


# -------------------------------------------------------------------- report


@dataclass
class Check:
    name: str
    passed: bool
    value: Optional[float] = None
    limit: Optional[float] = None
    detail: str = ""


@dataclass
class VerificationReport:
    subject: str
    max_wronskian_dev: Optional[float] = None
    max_residual_rel: Optional[float] = None
    node_count: Optional[int] = None
    bargmann_bound: Optional[float] = None
    tail: Optional[dict] = None
    flags: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.flags)

    def failures(self) -> list[Check]:
        return [c for c in self.flags if not c.passed]

    def add(self, name: str, passed: bool, value=None, limit=None, detail: str = ""):
        self.flags.append(Check(name, bool(passed), None if value is None else float(value),
                                None if limit is None else float(limit), detail))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _check_call(report: VerificationReport, name: str, fn):
    try:
        return fn()
    except ZeropotError as exc:
        report.add(name, False, detail=f"{type(exc).__name__}: {exc}")
        return None


def verify_pair(pair: SolutionPair, grid=None, gate: float = RESIDUAL_GATE) -> VerificationReport:
    """Wronskian, residuals of both solutions, nodes, tail slope and ``chi(inf) A = 1``."""
    rep = VerificationReport(f"pair {pair.family}{_params(pair.potential.params)}")
    r = working_grid(pair.domain) if grid is None else _radii(grid)
    if pair.chi is not None:
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            w = np.abs(_arr(pair.wronskian(r)) - 1.0)
        rep.max_wronskian_dev = float(np.max(w))
        rep.add("wronskian", rep.max_wronskian_dev < WRONSKIAN_GATE, rep.max_wronskian_dev, WRONSKIAN_GATE)
    # keep the stencil inside the domain
    rr = r[(r * 0.99 > pair.domain[0]) & (r * 1.01 < pair.domain[1])]
    res_phi = residual(pair.potential, pair.phi, rr, pair.dphi, pair.domain)
    rep.add("residual_phi", res_phi < gate, res_phi, gate)
    worst = res_phi
    if pair.chi is not None:
        res_chi = residual(pair.potential, pair.chi, rr, pair.dchi, pair.domain)
        rep.add("residual_chi", res_chi < gate, res_chi, gate)
        worst = max(worst, res_chi)
    rep.max_residual_rel = worst
    cert = certify_no_bound_states(pair)
    rep.node_count = cert.node_count
    if pair.no_bound_states:
        rep.add("no_bound_states", cert.ok, cert.A, A_MIN, cert.reason)
    else:
        rep.add("has_bound_states", not cert.ok, cert.node_count, detail=cert.reason)
    if pair.potential.tail_class == "short-range" and pair.no_bound_states:
        fit = _check_call(rep, "tail_fit", lambda: asymptotic_fit(pair.phi, pair.ell, r_max=_fit_r_max(pair)))
        if fit is not None:
            rep.tail = {"A": fit.A, "B": fit.B, "fit_residual": fit.residual}
            if pair.tail.kind == "linear-asymptote":
                dA = abs(fit.A / pair.tail.A - 1.0)
                rep.add("tail_A", dA < 1e-6, dA, 1e-6, f"fitted A = {fit.A:.12g}, closed form {pair.tail.A:.12g}")
            if pair.ell == 0 and pair.chi is not None:
                dev = abs(float(pair.chi(_fit_r_max(pair))) * fit.A - 1.0)
                rep.add("chi_inf_times_A", dev < 1e-6, dev, 1e-6)
    if pair.ell == 0 and pair.potential.origin_class == "regular" and pair.potential.tail_class == "short-range":
        rep.bargmann_bound = _check_call(rep, "bargmann", lambda: bargmann_bound(pair.potential))
    return rep


def verify_system(sys: ComposedSystem, grid=None, gate: float = RESIDUAL_GATE) -> VerificationReport:
    """Residual of the composed solution, node preservation and the Bargmann bound of ``V1``."""
    rep = VerificationReport("composed " + " | ".join(sys.provenance))
    base = sys.base
    r = working_grid((base.domain[0], sys.r_max), hi=sys.r_max) if grid is None else _radii(grid)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        w = np.abs(_arr(base.wronskian(r)) - 1.0)
    rep.max_wronskian_dev = float(np.max(w))
    rep.add("base_wronskian", rep.max_wronskian_dev < WRONSKIAN_GATE, rep.max_wronskian_dev, WRONSKIAN_GATE)
    rr = r[(r * 0.99 > base.domain[0]) & (r * 1.01 < sys.r_max)]
    res = residual(sys.as_potential(), sys.phi, rr, sys.dphi, (base.domain[0], sys.r_max))
    rep.max_residual_rel = res
    rep.add("residual", res < gate, res, gate)

    nodes = _check_call(rep, "nodes", lambda: count_nodes(sys.phi, (base.domain[0], sys.r_max * 0.999), sys.ell))
    x_hi = float(sys.mapping.forward(sys.r_max * 0.999))
    inner_nodes = _check_call(rep, "inner_nodes", lambda: count_nodes(sys.inner_phi, (0.0, x_hi), 0))
    rep.node_count = nodes
    if nodes is not None and inner_nodes is not None:
        rep.add("node_preservation", nodes == inner_nodes, nodes, inner_nodes,
                f"composed {nodes}, inner {inner_nodes} on x <= {x_hi:.6g}")
    if sys.depth == 1:
        bound = _check_call(rep, "bargmann", lambda: bargmann_bound(sys.inner))
        rep.bargmann_bound = bound
        if bound is not None and nodes is not None:
            rep.add("nodes_le_bargmann", nodes <= math.floor(bound + 1e-9), nodes, bound)
    return rep


def _params(params) -> str:
    return "(" + ",".join(f"{k}={v:g}" for k, v in params.items()) + ")" if params else ""


# --------------------------------------------------------------------- suite


def standard_systems() -> list[tuple[str, Callable[[], ComposedSystem], float]]:
    """Composed test cases ``(label, builder, residual gate)``."""
    rational_pair = lambda: make_pair("rational-exp-22", **{"lambda": 1.0, "a": 1.0})  # noqa: E731
    quartic_pair = lambda: make_pair("inverse-square-quartic-23", g=4.0, b=1.0)  # noqa: E731
    v_quartic = lambda: potential("inverse-square-quartic-23", g=4.0, b=1.0)  # noqa: E731
    v_rational = lambda: potential("rational-exp-22", **{"lambda": 1.0, "a": 1.0})  # noqa: E731
    attractive = lambda: potential("exponential-70", **{"lambda": -5.0, "mu": 1.0})  # noqa: E731
    return [
        ("free + quartic", lambda: compose(make_pair("free"), v_quartic()), RESIDUAL_GATE),
        ("rational + quartic", lambda: compose(rational_pair(), v_quartic()), RESIDUAL_GATE),
        ("quartic + rational", lambda: compose(quartic_pair(), v_rational()), RESIDUAL_GATE),
        ("rational + attractive exp", lambda: compose(rational_pair(), attractive()), RESIDUAL_GATE),
        ("exp + quartic", lambda: compose(make_pair("exponential-70"), v_quartic()), RESIDUAL_GATE),
        ("chi-exp + attractive exp", lambda: compose(make_pair("chi-exponential-82"), attractive()), RESIDUAL_GATE),
        ("inverse-power l=1 + quartic", lambda: compose(make_pair("inverse-power-72", g=1.0, n=6.0, ell=1.0), v_quartic()),
         RESIDUAL_GATE),
        ("coulomb + quartic", lambda: compose(make_pair("coulomb-72p"), v_quartic()), RESIDUAL_GATE),
        ("rational + quartic depth 2", lambda: iterate(rational_pair(), v_quartic(), 2), 1e-5),
    ]


def run_suite(families: Optional[Sequence[str]] = None, systems: bool = True) -> list[VerificationReport]:
    """Verify every catalog pair at its default parameters and the standard composed systems."""
    reports = []
    for fid in families if families is not None else list(FAMILIES):
        try:
            pair = make_pair(fid)
        except ZeropotError as exc:
            rep = VerificationReport(f"pair {fid}")
            if "potential only" in FAMILIES[fid].domain:
                rep.add("potential_only", True, detail=str(exc))
            else:
                rep.add("construct", False, detail=f"{type(exc).__name__}: {exc}")
            reports.append(rep)
            continue
        reports.append(verify_pair(pair))
    if systems:
        for label, build, gate in standard_systems():
            try:
                reports.append(verify_system(build(), gate=gate))
            except ZeropotError as exc:
                rep = VerificationReport(f"composed {label}")
                rep.add("construct", False, detail=f"{type(exc).__name__}: {exc}")
                reports.append(rep)
    return reports
