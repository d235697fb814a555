"""Closed-form base potentials and their zero-energy solution pairs.

Every pair is normalised so that ``W(phi, chi) = phi' chi - phi chi' = 1``
and ``chi`` is the second solution that stays bounded (tends to ``1/A``) at
infinity, i.e. ``chi(r) = phi(r) * int_r^inf dt / phi(t)^2``. Where the textbook
closed form uses another normalisation the rescaling constants are kept in
``SolutionPair.constants``.

Functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Literal, Mapping, Optional

import numpy as np
from scipy.special import gamma

from . import special
from .errors import DomainError, NotAdmissible, ParamDomain
from .numerics import (
    DEFAULT_TOL,
    CumulativeQuad,
    GridSample,
    GridSpec,
    TailModel,
    Tolerance,
    integrate_improper,
    quad_finite,
)

Fn = Callable[[np.ndarray], np.ndarray]

EULER_GAMMA = 0.57721566490153286061
# largest Bessel argument kept in the working domain of singular families
_SINGULAR_Z_MAX = 600.0


def _frozen(d: Mapping[str, float]) -> Mapping[str, float]:
    return MappingProxyType(dict(d))


@dataclass(frozen=True)
class PotentialSpec:
    """A radial potential ``V(r)``; the centrifugal term is *not* included."""

    evaluate: Fn
    ell: int = 0
    origin_class: Literal["regular", "strongly-singular"] = "regular"
    tail_class: Literal["short-range", "long-range"] = "short-range"
    params: Mapping[str, float] = field(default_factory=dict)
    family: str = "custom"

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 0:
            raise ValueError(f"ell must be a non-negative integer, got {self.ell}")
        object.__setattr__(self, "params", _frozen(self.params))

    def __call__(self, r):
        return self.evaluate(r)

    def effective(self, r):
        r = np.asarray(r, dtype=float)
        v = np.asarray(self.evaluate(r), dtype=float)
        if self.ell:
            v = v + self.ell * (self.ell + 1) / r**2
        return v

    def integrability(self, tol: Tolerance = Tolerance(rel=1e-8)) -> dict[str, float]:
        """``int_0^1 r|V| dr`` and ``int_1^inf r^(2 ell + 2)|V| dr``; ``inf`` if divergent."""
        out = {}
        try:
            if self.origin_class == "strongly-singular":
                raise ArithmeticError
            out["origin"] = quad_finite(lambda r: r * abs(float(self.evaluate(r))), 0.0, 1.0, tol)
        except Exception:
            out["origin"] = math.inf
        p = 2 * self.ell + 2
        try:
            if self.tail_class == "long-range":
                raise ArithmeticError
            out["infinity"] = integrate_improper(
                lambda r: r**p * abs(float(self.evaluate(r))), 1.0, TailModel("power-decay"), tol
            )
        except Exception:
            out["infinity"] = math.inf
        return out


@dataclass(frozen=True)
class SolutionPair:
    """Regular solution ``phi`` and bounded second solution ``chi`` with ``W = 1``.

    ``domain`` is the radial range on which the closed forms are evaluated
    without overflow. ``chi``/``dchi`` are ``None`` for numerically built
    regular solutions that have nodes.
    """

    phi: Fn
    dphi: Fn
    chi: Optional[Fn]
    dchi: Optional[Fn]
    tail: TailModel
    ell: int
    no_bound_states: bool
    potential: PotentialSpec
    family: str = "custom"
    domain: tuple[float, float] = (0.0, math.inf)
    constants: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "constants", _frozen(self.constants))

    def wronskian(self, r):
        r = np.asarray(r, dtype=float)
        return self.dphi(r) * self.chi(r) - self.phi(r) * self.dchi(r)


@dataclass(frozen=True)
class FamilyId:
    id: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "id", canonical_family(self.id))
        object.__setattr__(self, "params", _frozen(self.params))

    @classmethod
    def parse(cls, text: str) -> "FamilyId":
        """``"exp:lambda=-5,mu=1"`` -> ``FamilyId("exponential-70", {...})``."""
        name, _, rest = text.partition(":")
        params = {}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"bad parameter {item!r} in {text!r}")
            params[key.strip()] = float(val)
        return cls(name.strip(), params)

    def __str__(self):
        if not self.params:
            return self.id
        return self.id + ":" + ",".join(f"{k}={v:g}" for k, v in self.params.items())


# --------------------------------------------------------------- helpers


def _arr(r):
    return np.asarray(r, dtype=float)


def _out(x):
    return x if np.ndim(x) else float(x)


def _require(cond: bool, family: str, constraint: str, params: Mapping[str, float]):
    if not cond:
        shown = ", ".join(f"{k}={v:g}" for k, v in params.items())
        raise ParamDomain(f"{family}: requires {constraint} (got {shown})")


# --------------------------------------------------------------- potentials


def _pot_free(p):
    return PotentialSpec(lambda r: _out(np.zeros_like(_arr(r))), 0, params=p, family="free")


def _pot_22(p):
    lam, a = p["lambda"], p["a"]
    _require(a > 0, "rational-exp-22", "a > 0", p)
    return PotentialSpec(lambda r: _out(lam * a * a / (1.0 + a * _arr(r)) ** 4), 0, params=p,
                         family="rational-exp-22")


def _pot_23(p):
    g, b = p["g"], p["b"]
    _require(b > 0, "inverse-square-quartic-23", "b > 0", p)
    return PotentialSpec(lambda r: _out(g * b * b / (b * b + _arr(r) ** 2) ** 2), 0, params=p,
                         family="inverse-square-quartic-23")


def _pot_70(p):
    lam, mu = p["lambda"], p["mu"]
    _require(mu > 0, "exponential-70", "mu > 0", p)
    return PotentialSpec(lambda r: _out(lam * np.exp(-mu * _arr(r))), 0, params=p, family="exponential-70")


def _pot_72(p):
    g, n, ell = p["g"], p["n"], int(p["ell"])
    _require(g > 0 and n > 2, "inverse-power-72", "g > 0, n > 2", p)
    with np.errstate(divide="ignore"):
        return PotentialSpec(lambda r: _out(g / _arr(r) ** n), ell, "strongly-singular", params=p,
                             family="inverse-power-72")


def _pot_74(p):
    g = p["g"]
    _require(g > 0, "inverse-quartic-74", "g > 0", p)
    return PotentialSpec(lambda r: _out(g / _arr(r) ** 4), 0, "strongly-singular", params=p,
                         family="inverse-quartic-74")


def _pot_coulomb(p):
    alpha = p["alpha"]
    return PotentialSpec(lambda r: _out(alpha / _arr(r)), 0, "regular", "long-range", params=p,
                         family="coulomb-72p")


def _v79(p):
    al, be, n = p["alpha"], p["beta"], p["n"]

    def chi(r):
        return _out((1.0 + al * (1.0 + be * _arr(r)) ** (-n)) / (1.0 + al))

    def dchi(r):
        return _out(-al * n * be * (1.0 + be * _arr(r)) ** (-n - 1) / (1.0 + al))

    def d2chi(r):
        return _out(al * n * (n + 1) * be * be * (1.0 + be * _arr(r)) ** (-n - 2) / (1.0 + al))

    return chi, dchi, d2chi


def _v82(p):
    mu = p["mu"]

    def chi(r):
        return _out(0.5 * (1.0 + np.exp(-mu * _arr(r))))

    def dchi(r):
        return _out(-0.5 * mu * np.exp(-mu * _arr(r)))

    def d2chi(r):
        return _out(0.5 * mu * mu * np.exp(-mu * _arr(r)))

    return chi, dchi, d2chi


def _check_79(p):
    _require(p["alpha"] > 0 and p["beta"] > 0 and p["n"] > 1, "chi-rational-79",
             "alpha > 0, beta > 0, n > 1", p)


def _check_82(p):
    _require(p["mu"] > 0, "chi-exponential-82", "mu > 0", p)


def _pot_79(p):
    _check_79(p)
    chi, _, d2chi = _v79(p)
    return PotentialSpec(lambda r: _out(_arr(d2chi(r)) / _arr(chi(r))), 0, params=p, family="chi-rational-79")


def _pot_82(p):
    _check_82(p)
    mu = p["mu"]
    return PotentialSpec(lambda r: _out(mu * mu * np.exp(-mu * _arr(r)) / (1.0 + np.exp(-mu * _arr(r)))),
                         0, params=p, family="chi-exponential-82")


def _pot_68(p):
    g1, g2, pw, R0, ell = p["g1"], p["g2"], p["p"], p["R0"], int(p["ell"])
    _require(g1 > 0 and pw < 2 and 0 < R0 < 1, "log-singular-68-numeric", "g1 > 0, p < 2, 0 < R0 < 1", p)

    def V(r):
        r = _arr(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            L = np.log(1.0 / r)
            v = g1 / (r * r * L**pw) + g2 / (r * r * L * L)
        return _out(np.where(r < R0, v, 0.0))

    return PotentialSpec(V, ell, "strongly-singular", params=p, family="log-singular-68-numeric")


# --------------------------------------------------------------- pairs


def _pair_free(p):
    V = _pot_free(p)
    return SolutionPair(
        phi=lambda r: _out(_arr(r) * 1.0),
        dphi=lambda r: _out(np.ones_like(_arr(r))),
        chi=lambda r: _out(np.ones_like(_arr(r))),
        dchi=lambda r: _out(np.zeros_like(_arr(r))),
        tail=TailModel("linear-asymptote", 1.0, 0.0),
        ell=0, no_bound_states=True, potential=V, family="free",
    )


def _pair_22(p):
    lam, a = p["lambda"], p["a"]
    _require(lam > 0 and a > 0, "rational-exp-22", "lambda > 0, a > 0", p)
    V = _pot_22(p)
    sl = math.sqrt(lam)
    sh = math.sinh(sl)

    def phi(r):
        r = _arr(r)
        return _out((1 + a * r) / (a * sl) * np.sinh(sl * a * r / (1 + a * r)))

    def dphi(r):
        r = _arr(r)
        s = sl * a * r / (1 + a * r)
        return _out(np.sinh(s) / sl + np.cosh(s) / (1 + a * r))

    # cosh(s) - coth(sl) sinh(s) == sinh(sl - s)/sinh(sl), free of cancellation
    def chi(r):
        r = _arr(r)
        w = sl / (1 + a * r)
        return _out((1 + a * r) * np.sinh(w) / sh)

    def dchi(r):
        w = sl / (1 + a * _arr(r))
        return _out(a * (np.sinh(w) - w * np.cosh(w)) / sh)

    A = sh / sl
    B = (sh / sl - math.cosh(sl)) / a
    return SolutionPair(phi, dphi, chi, dchi, TailModel("linear-asymptote", A, B), 0, True, V,
                        "rational-exp-22")


def _pair_23(p):
    g, b = p["g"], p["b"]
    _require(g > 1 and b > 0, "inverse-square-quartic-23", "g > 1 (sinh branch), b > 0", p)
    V = _pot_23(p)
    c = math.sqrt(g - 1.0)
    half = c * math.pi / 2.0
    sh_half = math.sinh(half)

    def phi(r):
        r = _arr(r)
        return _out(np.sqrt(b * b + r * r) * np.sinh(c * np.arctan2(r, b)) / c)

    def dphi(r):
        r = _arr(r)
        th = np.arctan2(r, b)
        return _out((r * np.sinh(c * th) / c + b * np.cosh(c * th)) / np.sqrt(b * b + r * r))

    # bounded second solution: rho [cosh(c th) - coth(c pi/2) sinh(c th)] / b
    def chi(r):
        r = _arr(r)
        om = c * np.arctan2(b, r)
        return _out(np.sqrt(b * b + r * r) * np.sinh(om) / (b * sh_half))

    def dchi(r):
        r = _arr(r)
        om = c * np.arctan2(b, r)
        rho = np.sqrt(b * b + r * r)
        return _out((r * np.sinh(om) - c * b * np.cosh(om)) / (rho * b * sh_half))

    A = sh_half / c
    B = -b * math.cosh(half)
    consts = {"chi_scale": 1.0 / b, "phi_admixture": -c / b / math.tanh(half)}
    return SolutionPair(phi, dphi, chi, dchi, TailModel("linear-asymptote", A, B), 0, True, V,
                        "inverse-square-quartic-23", constants=consts)


def _pair_70(p):
    lam, mu = p["lambda"], p["mu"]
    _require(lam > 0 and mu > 0, "exponential-70", "lambda > 0, mu > 0", p)
    V = _pot_70(p)
    z0 = 2.0 * math.sqrt(lam) / mu
    i0z0 = float(special.bessel_i(0, z0))
    k0z0 = float(special.bessel_k(0, z0))
    logz0 = math.log(z0)
    # below this argument K0(z) = ln(2/z) - gamma and I0 = 1 to double precision
    z_small = 1e-8
    # near the origin the Bessel combination cancels, so use the power series of
    # phi'' = lam e^{-mu r} phi instead: c_{k+2} (k+2)(k+1) = lam sum_j (-mu)^j / j! c_{k-j}
    r_series = 0.05 / max(mu, math.sqrt(lam))
    n_terms = 24
    ex = [(-mu) ** j / math.factorial(j) for j in range(n_terms)]
    coef = [0.0, 1.0]
    for k in range(n_terms - 2):
        conv = math.fsum(ex[j] * coef[k - j] for j in range(k + 1))
        coef.append(lam * conv / ((k + 2) * (k + 1)))
    series = np.polynomial.Polynomial(coef)
    dseries = series.deriv()

    def _z(r):
        return z0 * np.exp(-0.5 * mu * _arr(r))

    def phi(r):
        r = _arr(r)
        z = _z(r)
        small = z < z_small
        zs = np.where(small, 1.0, z)
        big = 2.0 / mu * (i0z0 * special.bessel_k(0, zs) - k0z0 * special.bessel_i(0, zs))
        logz = logz0 - 0.5 * mu * r
        tiny = 2.0 / mu * (i0z0 * (math.log(2.0) - EULER_GAMMA - logz) - k0z0)
        out = np.where(small, tiny, big)
        return _out(np.where(r < r_series, series(r), out))

    def dphi(r):
        z = _z(r)
        small = z < z_small
        zs = np.where(small, 1.0, z)
        big = zs * (i0z0 * special.bessel_k(1, zs) + k0z0 * special.bessel_i(1, zs))
        out = np.where(small, i0z0, big)
        r = _arr(r)
        return _out(np.where(r < r_series, dseries(r), out))

    def chi(r):
        return _out(special.bessel_i(0, _z(r)) / i0z0)

    def dchi(r):
        z = _z(r)
        return _out(-0.5 * mu * z * special.bessel_i(1, z) / i0z0)

    A = i0z0
    B = 2.0 / mu * (i0z0 * (math.log(2.0) - EULER_GAMMA - logz0) - k0z0)
    return SolutionPair(phi, dphi, chi, dchi, TailModel("linear-asymptote", A, B), 0, True, V,
                        "exponential-70")


def _pair_72(p):
    g, n, ell = p["g"], p["n"], int(p["ell"])
    _require(g > 0 and n > 2 * ell + 3, "inverse-power-72", "g > 0, n > 2*ell + 3", p)
    V = _pot_72(p)
    nu = (2 * ell + 1) / (n - 2)
    q = 0.5 * (n - 2)
    beta = 2.0 * math.sqrt(g) / (n - 2)
    # phi ~ r^(ell+1) at infinity
    N = 0.5 * gamma(nu) * (0.5 * beta) ** (-nu)
    kappa = N / q

    def _z(r):
        return beta * _arr(r) ** (-q)

    def phi(r):
        r = _arr(r)
        z = _z(r)
        return _out(np.sqrt(r) * special.kve(nu, z) * np.exp(-z) / N)

    def dphi(r):
        r = _arr(r)
        z = _z(r)
        return _out((0.5 * special.kve(nu, z) - q * z * special.kvep(nu, z)) * np.exp(-z) / (np.sqrt(r) * N))

    def chi(r):
        r = _arr(r)
        z = _z(r)
        return _out(kappa * np.sqrt(r) * special.ive(nu, z) * np.exp(z))

    def dchi(r):
        r = _arr(r)
        z = _z(r)
        return _out(kappa * (0.5 * special.ive(nu, z) - q * z * special.ivep(nu, z)) * np.exp(z) / np.sqrt(r))

    A = 1.0
    B = float(gamma(-nu) / gamma(nu) * (0.5 * beta) ** (2 * nu))
    r_lo = (beta / _SINGULAR_Z_MAX) ** (1.0 / q)
    return SolutionPair(phi, dphi, chi, dchi, TailModel("linear-asymptote", A, B), ell, True, V,
                        "inverse-power-72", domain=(r_lo, math.inf),
                        constants={"phi_norm": 1.0 / N, "chi_norm": kappa, "nu": nu})


def _pair_74(p):
    g = p["g"]
    _require(g > 0, "inverse-quartic-74", "g > 0", p)
    V = _pot_74(p)
    s = math.sqrt(g)

    def phi(r):
        r = _arr(r)
        return _out(r * np.exp(-s / r))

    def dphi(r):
        r = _arr(r)
        return _out(np.exp(-s / r) * (1.0 + s / r))

    def chi(r):
        r = _arr(r)
        return _out(r / s * np.sinh(s / r))

    def dchi(r):
        r = _arr(r)
        return _out(np.sinh(s / r) / s - np.cosh(s / r) / r)

    return SolutionPair(phi, dphi, chi, dchi, TailModel("linear-asymptote", 1.0, -s), 0, True, V,
                        "inverse-quartic-74", domain=(s / _SINGULAR_Z_MAX, math.inf))


COULOMB_R_MAX = 30.0


def _pair_coulomb(p):
    alpha = p["alpha"]
    _require(alpha > 0, "coulomb-72p", "alpha > 0 (repulsive)", p)
    V = _pot_coulomb(p)

    def _z(r):
        return 2.0 * np.sqrt(alpha * _arr(r))

    def phi(r):
        z = _z(r)
        return _out(z / (2.0 * alpha) * special.bessel_i(1, z))

    def dphi(r):
        return _out(special.bessel_i(0, _z(r)))

    # the textbook chi is -pi sqrt(alpha r) K1; W = 1 needs the factor -2/pi
    def chi(r):
        z = _z(r)
        zs = np.where(z > 0, z, 1.0)
        return _out(np.where(z > 0, zs * special.bessel_k(1, zs), 1.0))

    def dchi(r):
        z = _z(r)
        zs = np.where(z > 0, z, 1.0)
        return _out(np.where(z > 0, -2.0 * alpha * special.bessel_k(0, zs), -np.inf))

    return SolutionPair(phi, dphi, chi, dchi, TailModel("none"), 0, True, V, "coulomb-72p",
                        domain=(0.0, COULOMB_R_MAX), constants={"chi_scale": -2.0 / math.pi})


def _pair_79(p):
    _check_79(p)
    chi, dchi, d2chi = _v79(p)
    _, pair = make_chi_first(chi, dchi, d2chi, tail_value=1.0 / (1.0 + p["alpha"]))
    return _rebrand(pair, "chi-rational-79", p)


def _pair_82(p):
    _check_82(p)
    chi, dchi, d2chi = _v82(p)
    _, pair = make_chi_first(chi, dchi, d2chi, tail_value=0.5)
    return _rebrand(pair, "chi-exponential-82", p)


def _rebrand(pair: SolutionPair, family: str, p) -> SolutionPair:
    from dataclasses import replace

    pot = replace(pair.potential, family=family, params=p)
    return replace(pair, family=family, potential=pot)


def _no_pair(p):
    raise NotAdmissible("log-singular-68-numeric has no closed-form pair; use potential() and numerics")


# --------------------------------------------------------------- registry


@dataclass(frozen=True)
class Family:
    id: str
    defaults: Mapping[str, float]
    domain: str
    potential: Callable
    pair: Callable
    regular_origin: bool = True


FAMILIES: dict[str, Family] = {
    f.id: f
    for f in [
        Family("free", {}, "none", _pot_free, _pair_free),
        Family("rational-exp-22", {"lambda": 1.0, "a": 1.0}, "lambda > 0, a > 0", _pot_22, _pair_22),
        Family("inverse-square-quartic-23", {"g": 4.0, "b": 1.0}, "g > 1, b > 0", _pot_23, _pair_23),
        Family("exponential-70", {"lambda": 1.0, "mu": 1.0}, "lambda > 0, mu > 0 (pair); any lambda as inner",
               _pot_70, _pair_70),
        Family("inverse-power-72", {"g": 1.0, "n": 5.0, "ell": 0.0}, "g > 0, n > 2*ell + 3", _pot_72, _pair_72,
               regular_origin=False),
        Family("inverse-quartic-74", {"g": 1.0}, "g > 0", _pot_74, _pair_74, regular_origin=False),
        Family("coulomb-72p", {"alpha": 1.0}, "alpha > 0; long range, r <= 30", _pot_coulomb, _pair_coulomb),
        Family("chi-rational-79", {"alpha": 1.0, "beta": 1.0, "n": 2.0}, "alpha > 0, beta > 0, n > 1",
               _pot_79, _pair_79),
        Family("chi-exponential-82", {"mu": 1.0}, "mu > 0", _pot_82, _pair_82),
        Family("log-singular-68-numeric", {"g1": 1.0, "g2": 0.0, "p": 1.0, "R0": 0.5, "ell": 0.0},
               "g1 > 0, p < 2, 0 < R0 < 1; potential only", _pot_68, _no_pair, regular_origin=False),
    ]
}

ALIASES = {
    "exp": "exponential-70",
    "exponential": "exponential-70",
    "rational": "rational-exp-22",
    "quartic": "inverse-square-quartic-23",
    "power": "inverse-power-72",
    "inverse-power": "inverse-power-72",
    "inverse-quartic": "inverse-quartic-74",
    "coulomb": "coulomb-72p",
    "chi-rational": "chi-rational-79",
    "chi-exp": "chi-exponential-82",
    "log": "log-singular-68-numeric",
}


def canonical_family(name: str) -> str:
    name = name.strip()
    name = ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ParamDomain(f"unknown family {name!r}; known: {', '.join(FAMILIES)}")
    return name


def _resolve(family, params) -> tuple[Family, dict]:
    if isinstance(family, str):
        family = FamilyId(family, params or {})
    elif params:
        family = FamilyId(family.id, {**family.params, **params})
    fam = FAMILIES[family.id]
    unknown = set(family.params) - set(fam.defaults)
    if unknown:
        raise ParamDomain(f"{fam.id}: unknown parameter(s) {sorted(unknown)}; expected {sorted(fam.defaults)}")
    return fam, {**fam.defaults, **family.params}


def potential(family: FamilyId | str, **params) -> PotentialSpec:
    """The family's potential; parameter domain is wider than ``make_pair``'s
    (e.g. attractive ``exponential-70`` for use as an inner potential)."""
    fam, p = _resolve(family, params)
    return fam.potential(p)


def make_pair(family: FamilyId | str, **params) -> SolutionPair:
    fam, p = _resolve(family, params)
    return fam.pair(p)


def closed_form_regular(V: PotentialSpec) -> Optional[tuple[Fn, Fn]]:
    """``(phi, dphi)`` with ``phi(0) = 0, phi'(0) = 1`` if ``V`` is a catalog
    potential whose pair is available at these parameters."""
    fam = FAMILIES.get(V.family)
    if fam is None or not fam.regular_origin or V.ell != 0:
        return None
    try:
        pair = fam.pair(dict(V.params))
    except (ParamDomain, NotAdmissible):
        return None
    return pair.phi, pair.dphi


# --------------------------------------------------------------- chi-first


def make_chi_first(
    chi: Fn,
    dchi: Fn,
    d2chi: Fn,
    tail_value: float,
    permissive: bool = False,
    r_max: float = 1e4,
    tol: Tolerance = Tolerance(rel=1e-13),
) -> tuple[PotentialSpec, SolutionPair]:
    """Build ``V0 = chi''/chi`` and ``phi0 = chi int_0^r dt/chi^2`` from an
    admissible second solution.

    ``chi`` must be positive, decreasing, ``chi(0) = 1`` and tend to
    ``tail_value = 1/A`` with ``1 < A < inf`` (``A = 1`` tolerated when
    ``permissive``).
    """
    if not tail_value > 0:
        raise NotAdmissible(f"chi(inf) = {tail_value} gives A = inf; need 1 < A < inf")
    A = 1.0 / tail_value
    if not (A > 1.0 or (permissive and A >= 1.0)):
        raise NotAdmissible(f"A = {A:g} violates 1 < A < inf")
    probe = np.concatenate([[0.0], np.geomspace(1e-4, r_max, 400)])
    c = _arr(chi(probe))
    dc = _arr(dchi(probe))
    if abs(c[0] - 1.0) > 1e-12:
        raise NotAdmissible(f"chi(0) = {c[0]!r}, expected 1")
    if np.any(c <= 0):
        raise NotAdmissible("chi is not positive on the probe grid")
    if np.any(dc > 0) or np.any(np.diff(c) > 1e-15):
        raise NotAdmissible("chi is not decreasing on the probe grid")
    if abs(c[-1] - tail_value) > 1e-6 * max(1.0, tail_value):
        raise NotAdmissible(f"chi({r_max:g}) = {c[-1]!r} does not approach chi(inf) = {tail_value!r}")

    def V(r):
        return _out(_arr(d2chi(r)) / _arr(chi(r)))

    pot = PotentialSpec(V, 0, params={"A": A}, family="chi-first")
    phi, dphi = phi_from_chi_quadrature(chi, dchi, r_max=r_max, tol=tol)

    # phi0 = chi * (A^2 r - D + o(1)), D = int_0^inf (A^2 - 1/chi^2)
    def defect(t):
        return A * A - 1.0 / float(chi(t)) ** 2

    if A == 1.0 and np.all(c == 1.0):
        D = 0.0
    else:
        # black-box chi limits A^2 - 1/chi^2 to ~1e-16 absolute, far below its size only near 0
        D = integrate_improper(defect, 0.0, TailModel("power-decay"), Tolerance(rel=1e-10, max_steps=400))
    pair = SolutionPair(phi, dphi, chi, dchi, TailModel("linear-asymptote", A, -D / A), 0, True, pot,
                        "chi-first", constants={"defect_integral": D})
    return pot, pair


def phi_from_chi_quadrature(chi: Fn, dchi: Fn, r_max: float = 1e4,
                            tol: Tolerance = DEFAULT_TOL) -> tuple[Fn, Fn]:
    """``phi = chi int_0^r dt/chi^2`` and its derivative, tabulated cumulatively."""
    knots = np.concatenate([[0.0], np.geomspace(1e-3, r_max, 120)])
    table = CumulativeQuad(lambda t: 1.0 / float(chi(t)) ** 2, knots, tol)

    def _integral(r):
        return np.vectorize(table.from_first, otypes=[float])(_arr(r))

    def phi(r):
        r = _arr(r)
        return _out(_arr(chi(r)) * _integral(r))

    def dphi(r):
        r = _arr(r)
        c = _arr(chi(r))
        return _out(_arr(dchi(r)) * _integral(r) + 1.0 / c)

    return phi, dphi


# --------------------------------------------------------------- sampling


def sample_potential(p: PotentialSpec, grid: GridSpec | np.ndarray, centrifugal: bool = False) -> GridSample:
    r = grid.radii() if isinstance(grid, GridSpec) else _arr(grid)
    if np.any(r == 0):
        if p.origin_class == "strongly-singular" or (centrifugal and p.ell > 0):
            raise DomainError(f"{p.family} is singular at r = 0")
    with np.errstate(divide="ignore"):
        v = _arr(p.effective(r) if centrifugal else p.evaluate(r))
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{p.family} is not finite on the requested grid")
    return GridSample(r, v)
