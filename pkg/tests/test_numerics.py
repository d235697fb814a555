import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zeropot.catalog import PotentialSpec, potential
from zeropot.errors import BadTail, NonConvergent, NotBracketed, Overflow
from zeropot.numerics import (
    CumulativeQuad,
    GridSample,
    GridSpec,
    RegularSolution,
    TailModel,
    Tolerance,
    integrate_improper,
    invert_monotone,
    quad_finite,
    series_start,
    solve_zero_energy_ivp,
)

I0_2 = 2.2795853023360673  # sum_m 1/(m!)^2, the series oracle for I_0(2)


def i0_series(x, terms=30):
    return math.fsum((0.5 * x) ** (2 * m) / math.factorial(m) ** 2 for m in range(terms))


def test_series_oracle_for_i0():
    assert i0_series(2.0) == pytest.approx(I0_2, rel=1e-15)


# --------------------------------------------------------------- value types


@pytest.mark.parametrize("kw", [{"rel": 0.0}, {"rel": -1e-3}, {"abs": -1.0}, {"max_steps": 0}])
def test_tolerance_rejects_bad_fields(kw):
    with pytest.raises(ValueError):
        Tolerance(**kw)


def test_tolerance_scaled():
    t = Tolerance(rel=1e-8, abs=1e-12, max_steps=7).scaled(0.5)
    assert (t.rel, t.abs, t.max_steps) == (5e-9, 5e-13, 7)


def test_tail_model_linear_needs_positive_slope():
    with pytest.raises(ValueError):
        TailModel("linear-asymptote", 0.0, 1.0)
    with pytest.raises(ValueError):
        TailModel("quadratic")


def test_grid_sample_validation():
    GridSample([0.0, 1.0], [0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        GridSample([0.0], [0.0])
    with pytest.raises(ValueError):
        GridSample([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        GridSample([-1.0, 1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        GridSample([0.0, 1.0], [0.0, 1.0, 2.0])


def test_grid_spec_parse():
    g = GridSpec.parse("log:1e-2,20,400")
    r = g.radii()
    assert len(r) == 400 and r[0] == pytest.approx(1e-2) and r[-1] == pytest.approx(20.0)
    assert np.allclose(np.diff(np.log(r)), np.log(2000) / 399)
    lin = GridSpec.parse("linear:0,1,11").radii()
    assert np.allclose(lin, np.linspace(0, 1, 11))
    with pytest.raises(ValueError):
        GridSpec.parse("log:0,1,10")
    with pytest.raises(ValueError):
        GridSpec(0.0, 1.0, 1)


# ---------------------------------------------------------------- quadrature


def test_improper_inverse_square():
    assert integrate_improper(lambda t: 1 / t**2, 1.0, TailModel("power-decay")) == pytest.approx(1.0, rel=1e-10)


def test_improper_exponential():
    assert integrate_improper(lambda t: math.exp(-t), 0.0, TailModel("power-decay")) == pytest.approx(1.0, rel=1e-10)


def test_improper_inverse_quartic_chi_oracle():
    # int_1^inf dt/phi0^2 with phi0 = t e^{-1/t}; multiplied by phi0(1) it is chi0(1) = sinh(1)
    val = integrate_improper(lambda t: 1.0 / (t * math.exp(-1.0 / t)) ** 2, 1.0,
                             TailModel("linear-asymptote", 1.0, -1.0), Tolerance(rel=1e-12))
    assert val * math.exp(-1.0) == pytest.approx(math.sinh(1.0), rel=1e-10)


def test_improper_linear_tail_uses_analytic_remainder():
    # f = 1/(t+1)^2 is exactly the model with A = B = 1
    val = integrate_improper(lambda t: 1 / (t + 1) ** 2, 0.0, TailModel("linear-asymptote", 1.0, 1.0))
    assert val == pytest.approx(1.0, rel=1e-12)


def test_improper_bad_tail():
    with pytest.raises((BadTail, NonConvergent)):
        integrate_improper(lambda t: 1 / t, 1.0, TailModel("none"))


def test_quad_finite_respects_tolerance():
    with pytest.raises(NonConvergent):
        quad_finite(lambda t: math.sin(1 / t) / t, 1e-9, 1.0, Tolerance(rel=1e-14, max_steps=1))


@given(b=st.floats(1.1, 40.0))
@settings(max_examples=25, deadline=None)
def test_improper_additive_over_split(b):
    f = lambda t: 1.0 / (1.0 + t * t)  # noqa: E731
    tol = Tolerance(rel=1e-10)
    whole = integrate_improper(f, 1.0, TailModel("power-decay"), tol)
    parts = quad_finite(f, 1.0, b, tol) + integrate_improper(f, b, TailModel("power-decay"), tol)
    assert abs(whole - parts) <= 2 * tol.rel * whole
    assert whole == pytest.approx(math.pi / 4, rel=1e-9)


def test_cumulative_quad_both_directions():
    table = CumulativeQuad(math.exp, np.linspace(0.0, 3.0, 7))
    for r in (0.0, 0.3, 1.26, 3.0, 3.5, -0.5):
        assert table.from_first(r) == pytest.approx(math.exp(r) - 1.0, rel=1e-12, abs=1e-14)
        assert table.to_last(r) == pytest.approx(math.exp(3.0) - math.exp(r), rel=1e-12, abs=1e-13)
    assert table.between(0.5, 2.5) == pytest.approx(math.exp(2.5) - math.exp(0.5), rel=1e-12)


# ------------------------------------------------------------------------ ODE

FREE = PotentialSpec(lambda r: np.zeros_like(np.asarray(r, dtype=float)))


def test_ivp_free_is_linear_to_100():
    r = np.linspace(0.0, 100.0, 1001)
    sol = solve_zero_energy_ivp(FREE, 0.0, 0.0, 1.0, 100.0, r_eval=r)
    assert np.max(np.abs(sol.y - r)) < 1e-12
    assert np.max(np.abs(sol.dy - 1.0)) < 1e-12


def test_ivp_inverse_quartic_from_closed_form_start():
    V = potential("inverse-quartic-74", g=1.0)
    r0 = 0.05
    y0 = r0 * math.exp(-1 / r0)
    dy0 = (1 + 1 / r0) * math.exp(-1 / r0)
    sol = solve_zero_energy_ivp(V, r0, y0, dy0, 2.0, Tolerance(rel=1e-12), r_eval=[r0, 2.0])
    assert sol.y[-1] == pytest.approx(2 * math.exp(-0.5), rel=1e-8)


def test_ivp_exponential_slope_tends_to_i0():
    V = potential("exponential-70", **{"lambda": 1.0, "mu": 1.0})
    sol = solve_zero_energy_ivp(V, 0.0, 0.0, 1.0, 60.0, Tolerance(rel=1e-12), r_eval=[59.0, 60.0])
    assert sol.y[-1] - sol.y[-2] == pytest.approx(I0_2, rel=1e-9)
    assert sol.dy[-1] == pytest.approx(I0_2, rel=1e-9)


def test_ivp_halving_tolerance_does_not_increase_error():
    V = potential("inverse-quartic-74", g=1.0)
    r0 = 0.05
    y0, dy0 = r0 * math.exp(-1 / r0), (1 + 1 / r0) * math.exp(-1 / r0)
    r = np.linspace(0.1, 5.0, 50)
    exact = r * np.exp(-1 / r)
    errs = []
    for rel in (1e-6, 5e-7, 2.5e-7, 1.25e-7):
        sol = solve_zero_energy_ivp(V, r0, y0, dy0, 5.0, Tolerance(rel=rel), r_eval=r)
        errs.append(np.max(np.abs(sol.y / exact - 1)))
    assert all(b <= a * 1.05 for a, b in zip(errs, errs[1:]))


def test_ivp_overflow_cap():
    V = PotentialSpec(lambda r: 400.0 + 0 * np.asarray(r, dtype=float))
    with pytest.raises(Overflow):
        solve_zero_energy_ivp(V, 0.0, 0.0, 1.0, 100.0, cap=1e30)


def test_ivp_rejects_origin_start_for_ell_positive():
    with pytest.raises(ValueError):
        solve_zero_energy_ivp(PotentialSpec(FREE.evaluate, 1), 0.0, 0.0, 1.0, 1.0)


def test_series_start_free_ell():
    for ell in (1, 2, 3):
        y0, dy0 = series_start(PotentialSpec(FREE.evaluate, ell), 0.01)
        norm = math.prod(range(2 * ell + 1, 0, -2))
        assert y0 == pytest.approx(0.01 ** (ell + 1) / norm)
        assert dy0 == pytest.approx((ell + 1) * 0.01**ell / norm)


def test_regular_solution_free_ell_two():
    sol = RegularSolution(PotentialSpec(FREE.evaluate, 2), 20.0)
    r = np.array([1e-4, 0.5, 3.0, 20.0, 25.0])
    assert np.allclose(sol(r[:4]), r[:4] ** 3 / 15, rtol=1e-9)
    assert np.allclose(sol.derivative(r[:4]), r[:4] ** 2 / 5, rtol=1e-9)


def test_regular_solution_matches_bessel_oracle():
    # V = -5 e^{-r}: phi = -(pi/mu)[J0(z0)Y0(z) - Y0(z0)J0(z)], z = 2 sqrt(5) e^{-r/2}
    from scipy.special import j0, y0

    V = potential("exponential-70", **{"lambda": -5.0, "mu": 1.0})
    sol = RegularSolution(V, 30.0)
    r = np.linspace(0.01, 30.0, 300)
    z0 = 2 * math.sqrt(5)
    z = z0 * np.exp(-r / 2)
    oracle = -math.pi * (j0(z0) * y0(z) - y0(z0) * j0(z))
    assert np.max(np.abs(sol(r) - oracle)) < 1e-9 * np.max(np.abs(oracle))


# ------------------------------------------------------------------ inversion


def test_invert_identity_and_cube():
    assert invert_monotone(lambda r: r, 3.7, (0.0, 10.0)) == pytest.approx(3.7, rel=1e-14)
    assert invert_monotone(lambda r: r**3, 8.0, (0.0, 5.0)) == pytest.approx(2.0, rel=1e-14)
    assert invert_monotone(lambda r: r**3, 8.0, (0.0, 5.0), dm=lambda r: 3 * r * r) == pytest.approx(2.0, rel=1e-14)


def test_invert_not_bracketed():
    with pytest.raises(NotBracketed):
        invert_monotone(lambda r: r, 11.0, (0.0, 10.0))


@given(r=st.floats(1e-6, 1e3), use_derivative=st.booleans())
@settings(max_examples=60, deadline=None)
def test_invert_round_trip(r, use_derivative):
    m = lambda t: t + math.sinh(t / 100.0) + math.sqrt(t)  # noqa: E731
    dm = (lambda t: 1 + math.cosh(t / 100.0) / 100.0 + 0.5 / math.sqrt(t)) if use_derivative else None
    got = invert_monotone(m, m(r), (0.0, 2e3), Tolerance(rel=1e-13), dm=dm)
    assert abs(m(got) - m(r)) <= 1e-13 * abs(m(r)) + 1e-300
    assert got == pytest.approx(r, rel=1e-10)
