import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zeropot.analysis import residual, working_grid
from zeropot.catalog import (
    ALIASES,
    FAMILIES,
    FamilyId,
    closed_form_regular,
    make_chi_first,
    make_pair,
    potential,
    sample_potential,
)
from zeropot.errors import DomainError, NotAdmissible, ParamDomain
from zeropot.numerics import GridSpec

PAIR_CASES = [
    ("free", {}),
    ("rational-exp-22", {"lambda": 1.0, "a": 1.0}),
    ("rational-exp-22", {"lambda": 9.0, "a": 0.5}),
    ("inverse-square-quartic-23", {"g": 4.0, "b": 1.0}),
    ("inverse-square-quartic-23", {"g": 1.5, "b": 2.0}),
    ("exponential-70", {"lambda": 1.0, "mu": 1.0}),
    ("exponential-70", {"lambda": 4.0, "mu": 0.5}),
    ("inverse-power-72", {"g": 1.0, "n": 5.0, "ell": 0.0}),
    ("inverse-power-72", {"g": 2.0, "n": 6.0, "ell": 1.0}),
    ("inverse-power-72", {"g": 1.0, "n": 8.0, "ell": 2.0}),
    ("inverse-quartic-74", {"g": 1.0}),
    ("inverse-quartic-74", {"g": 0.25}),
    ("coulomb-72p", {"alpha": 1.0}),
    ("coulomb-72p", {"alpha": 0.3}),
    ("chi-rational-79", {"alpha": 1.0, "beta": 1.0, "n": 2.0}),
    ("chi-exponential-82", {"mu": 1.0}),
]


def _ids(case):
    fid, p = case
    return str(FamilyId(fid, p))


@pytest.fixture(scope="module", params=PAIR_CASES, ids=[_ids(c) for c in PAIR_CASES])
def pair(request):
    fid, p = request.param
    return make_pair(fid, **p)


def _grid(pair, points=400):
    r = working_grid(pair.domain, points)
    # keep finite-difference stencils inside the domain
    return r[(r * 0.99 > pair.domain[0]) & (r * 1.01 < pair.domain[1])]


# ------------------------------------------------------------------ examples


def test_free_pair():
    p = make_pair("free")
    r = np.array([0.5, 2.0, 7.0])
    assert np.all(p.phi(r) == r) and np.all(p.chi(r) == 1.0)
    assert (p.tail.A, p.tail.B) == (1.0, 0.0)


def test_inverse_quartic_closed_form_values():
    p = make_pair("inverse-quartic-74", g=1.0)
    assert p.phi(1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert p.chi(1.0) == pytest.approx(math.sinh(1.0), rel=1e-15)
    assert p.chi(1.0) == pytest.approx(1.17520, abs=1e-5)


def test_rational_exp_values():
    p = make_pair("rational-exp-22", **{"lambda": 1.0, "a": 1.0})
    assert p.phi(1.0) == pytest.approx(2 * math.sinh(0.5), rel=1e-15)
    assert p.phi(1.0) == pytest.approx(1.04219, abs=1e-5)
    # 2[cosh(1/2) - coth(1) sinh(1/2)] evaluates to 0.886818883970074
    formula = 2 * (math.cosh(0.5) - math.sinh(0.5) / math.tanh(1.0))
    assert p.chi(1.0) == pytest.approx(formula, rel=1e-14)
    assert p.chi(1.0) == pytest.approx(0.886818883970074, rel=1e-14)
    assert p.tail.A == pytest.approx(math.sinh(1.0), rel=1e-15)


def test_exponential_chi_ratio_form():
    p = make_pair("exponential-70", **{"lambda": 1.0, "mu": 1.0})
    assert p.chi(0.0) == pytest.approx(1.0, rel=1e-15)
    assert p.chi(200.0) == pytest.approx(1 / 2.2795853023360673, rel=1e-13)
    assert p.tail.A == pytest.approx(2.2795853023360673, rel=1e-14)


def test_inverse_square_quartic_chi_limit():
    # the bounded second solution tends to c / sinh(c pi / 2), c = sqrt(g - 1)
    p = make_pair("inverse-square-quartic-23", g=4.0, b=1.0)
    c = math.sqrt(3.0)
    assert p.chi(0.0) == pytest.approx(1.0, rel=1e-14)
    assert p.chi(1e8) == pytest.approx(c / math.sinh(c * math.pi / 2), rel=1e-7)
    assert p.tail.A * p.chi(1e8) == pytest.approx(1.0, rel=1e-7)


def test_inverse_power_reduces_to_inverse_quartic():
    p72 = make_pair("inverse-power-72", g=1.0, n=4.0, ell=0.0)
    p74 = make_pair("inverse-quartic-74", g=1.0)
    r = np.geomspace(0.05, 50, 100)
    assert np.allclose(p72.phi(r), p74.phi(r), rtol=1e-12)
    assert np.allclose(p72.chi(r), p74.chi(r), rtol=1e-12)


def test_coulomb_constant_recorded():
    p = make_pair("coulomb-72p", alpha=1.0)
    assert p.constants["chi_scale"] == pytest.approx(-2 / math.pi)
    assert p.chi(0.0) == 1.0
    assert p.potential.tail_class == "long-range"


@pytest.mark.parametrize(
    "fid, params",
    [
        ("rational-exp-22", {"lambda": -1.0}),
        ("rational-exp-22", {"a": 0.0}),
        ("inverse-square-quartic-23", {"g": 0.5}),
        ("exponential-70", {"lambda": -5.0}),
        ("exponential-70", {"mu": 0.0}),
        ("inverse-power-72", {"n": 3.0}),
        ("inverse-power-72", {"n": 5.0, "ell": 1.0}),
        ("coulomb-72p", {"alpha": -1.0}),
        ("chi-rational-79", {"n": 1.0}),
        ("free", {"g": 1.0}),
    ],
)
def test_param_domain_errors(fid, params):
    with pytest.raises(ParamDomain):
        make_pair(fid, **params)


def test_param_domain_names_the_constraint():
    with pytest.raises(ParamDomain, match=r"n > 2\*ell \+ 3"):
        make_pair("inverse-power-72", n=5.0, ell=1.0)


def test_potential_only_family():
    V = potential("log-singular-68-numeric")
    assert V(0.7) == 0.0 and V(0.3) > 0
    with pytest.raises(NotAdmissible):
        make_pair("log-singular-68-numeric")


def test_family_id_parse_and_aliases():
    fid = FamilyId.parse("exp:lambda=-5,mu=1")
    assert fid.id == "exponential-70" and dict(fid.params) == {"lambda": -5.0, "mu": 1.0}
    assert str(fid) == "exponential-70:lambda=-5,mu=1"
    assert set(ALIASES.values()) <= set(FAMILIES)
    with pytest.raises(ParamDomain):
        FamilyId.parse("nonsense")
    with pytest.raises(ValueError):
        FamilyId.parse("exp:lambda")


def test_attractive_inner_potential_allowed():
    V = potential("exp", **{"lambda": -5.0, "mu": 1.0})
    assert V(0.0) == -5.0
    assert closed_form_regular(V) is None
    assert closed_form_regular(potential("rational")) is not None
    assert closed_form_regular(potential("inverse-quartic")) is None  # singular origin


# ----------------------------------------------------------- sample_potential


def test_sample_potential_examples():
    assert np.all(sample_potential(potential("free"), np.array([1.0, 2.0, 3.0])).y == 0)
    assert sample_potential(potential("inverse-quartic", g=1.0), np.array([1.0, 2.0])).y[0] == 1.0
    assert sample_potential(potential("rational"), np.array([0.0, 1.0])).y[0] == 1.0
    with pytest.raises(DomainError):
        sample_potential(potential("inverse-quartic"), np.array([0.0, 1.0]))


def test_sample_potential_centrifugal():
    V = potential("inverse-power-72", g=1.0, n=6.0, ell=1.0)
    s = sample_potential(V, GridSpec.parse("log:1,2,3"), centrifugal=True)
    assert np.allclose(s.y, 1 / s.r**6 + 2 / s.r**2)


# ------------------------------------------------------------ chi-first


def test_chi_first_exponential():
    pot, pair = make_chi_first(*_chi82(1.0), tail_value=0.5)
    r = np.geomspace(1e-3, 40, 200)
    assert np.max(np.abs(pot(r) - np.exp(-r) / (1 + np.exp(-r)))) < 1e-10
    assert pot(0.0) == pytest.approx(0.5, rel=1e-15)
    assert pair.tail.A == 2.0
    assert pair.tail.B == pytest.approx(-2 * (math.log(2) + 0.5), rel=1e-9)


def _chi82(mu):
    return (lambda r: 0.5 * (1 + np.exp(-mu * np.asarray(r, dtype=float))),
            lambda r: -0.5 * mu * np.exp(-mu * np.asarray(r, dtype=float)),
            lambda r: 0.5 * mu * mu * np.exp(-mu * np.asarray(r, dtype=float)))


def test_chi_first_exponential_phi_closed_form():
    # phi0 = chi * (4/mu)[ln((1+e^{mu r})/2) + 1/(1+e^{mu r}) - 1/2]
    pair = make_pair("chi-exponential-82", mu=1.0)
    r = np.geomspace(1e-3, 60, 150)
    e = np.exp(r)
    exact = pair.chi(r) * 4 * (np.log((1 + e) / 2) + 1 / (1 + e) - 0.5)
    assert np.max(np.abs(pair.phi(r) / exact - 1)) < 1e-11


def test_chi_first_rational_origin_value():
    pot = potential("chi-rational-79", alpha=1.0, beta=1.0, n=2.0)
    assert pot(0.0) == pytest.approx(3.0, rel=1e-15)
    # V0 (1 + beta r)^(n+2) -> alpha n (n+1) beta^2 as chi -> 1/(1 + alpha)
    r = np.array([1e3, 1e4])
    assert np.allclose(pot(r) * (1 + r) ** 4, 6.0, rtol=1e-5)
    pot2 = potential("chi-rational-79", alpha=0.5, beta=2.0, n=3.0)
    assert pot2(0.0) == pytest.approx(0.5 * 12 * 4 / 1.5, rel=1e-15)
    assert pot2(1e4) * (1 + 2e4) ** 5 == pytest.approx(0.5 * 12 * 4, rel=1e-5)


def test_chi_first_free_boundary():
    one = (lambda r: np.ones_like(np.asarray(r, dtype=float)), lambda r: np.zeros_like(np.asarray(r, dtype=float)),
           lambda r: np.zeros_like(np.asarray(r, dtype=float)))
    with pytest.raises(NotAdmissible):
        make_chi_first(*one, tail_value=1.0)
    pot, pair = make_chi_first(*one, tail_value=1.0, permissive=True)
    r = np.array([0.5, 3.0, 20.0])
    assert np.all(pot(r) == 0)
    assert np.allclose(pair.phi(r), r, rtol=1e-13)


@pytest.mark.parametrize(
    "chi, tail",
    [
        (lambda r: 1 / (1 + np.asarray(r)), 0.0),  # chi(inf) = 0, A infinite
        (lambda r: 2 - 1 / (1 + np.asarray(r)), 2.0),  # increasing, A < 1
        (lambda r: 0.5 + 0.5 * np.cos(np.asarray(r)) ** 2, 0.5),  # not monotone
        (lambda r: 0.9 + 0.05 * np.exp(-np.asarray(r)), 0.9),  # chi(0) != 1
    ],
)
def test_chi_first_rejects(chi, tail):
    zero = lambda r: np.zeros_like(np.asarray(r, dtype=float))  # noqa: E731
    with pytest.raises(NotAdmissible):
        make_chi_first(chi, zero, zero, tail_value=tail)


# ------------------------------------------------------------ invariants


def test_wronskian_is_one(pair):
    r = working_grid(pair.domain)
    with np.errstate(all="ignore"):
        w = pair.wronskian(r)
    assert np.max(np.abs(w - 1)) < 1e-8


def test_no_bound_state_pairs_positive(pair):
    assert pair.no_bound_states
    r = working_grid(pair.domain)
    assert np.all(pair.phi(r) >= 0) and np.all(pair.phi(r[r > 0.05]) > 0)
    if pair.tail.kind == "linear-asymptote":
        assert pair.tail.A > 0


def test_origin_behaviour(pair):
    if pair.potential.origin_class != "regular":
        pytest.skip("singular origin: normalised at infinity")
    assert pair.phi(0.0) == 0.0
    assert pair.dphi(0.0) == pytest.approx(1.0, rel=1e-12)
    assert pair.chi(0.0) == pytest.approx(1.0, rel=1e-12)


def test_residuals_of_both_solutions(pair):
    r = _grid(pair)
    assert residual(pair.potential, pair.phi, r, pair.dphi) < 1e-6
    assert residual(pair.potential, pair.chi, r, pair.dchi) < 1e-6


def test_chi_shape_for_repulsive_potentials(pair):
    if pair.ell:
        pytest.skip("chi diverges at the origin for ell > 0")
    r = _grid(pair)
    assert np.all(pair.potential(r) >= 0)
    c = pair.chi(r)
    assert np.all(np.diff(c) <= 1e-15 * c[:-1])
    # convexity from chi'' = V chi >= 0, checked through the derivative
    dc = pair.dchi(r)
    assert np.all(np.diff(dc) >= -1e-12 * np.abs(dc[:-1]))


def test_coulomb_shape():
    p = make_pair("coulomb-72p", alpha=1.0)
    r = np.geomspace(1e-3, 30, 400)
    phi, dphi, chi = p.phi(r), p.dphi(r), p.chi(r)
    assert np.all(np.diff(phi) > 0) and np.all(np.diff(dphi) > 0)
    assert np.all(chi > 0) and np.all(np.diff(chi) < 0)


@given(lam=st.floats(0.05, 20.0), a=st.floats(0.05, 5.0))
@settings(max_examples=25, deadline=None)
def test_rational_exp_wronskian_property(lam, a):
    p = make_pair("rational-exp-22", **{"lambda": lam, "a": a})
    r = np.geomspace(1e-3, 50, 60)
    assert np.max(np.abs(p.wronskian(r) - 1)) < 1e-8
    assert p.tail.A > 1 and p.tail.B < 0


@given(g=st.floats(0.1, 10.0), n=st.floats(3.2, 9.0))
@settings(max_examples=20, deadline=None)
def test_inverse_power_wronskian_property(g, n):
    p = make_pair("inverse-power-72", g=g, n=n, ell=0.0)
    r = working_grid(p.domain, 60)
    with np.errstate(all="ignore"):
        assert np.max(np.abs(p.wronskian(r) - 1)) < 1e-8
