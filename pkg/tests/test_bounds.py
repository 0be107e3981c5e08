import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from peakaoi import bounds
from peakaoi.bounds import (
    BoundCurve,
    backlog_tail_bound,
    bound_curve,
    mean_bound_dm1,
    mean_bound_mm1,
    violation_bound_dm1,
    violation_bound_generic,
    violation_bound_mm1,
    violation_bound_mm1_free_theta,
)
from peakaoi.dist import Erlang, Exponential
from peakaoi.errors import InfeasibleTheta, NotAbsolutelyContinuous, SingularTheta, UnstableModel
from peakaoi.exact import exact_mean_peak_dm1, exact_mean_peak_mm1
from peakaoi.theta import QueueModel, dm1, mm1, solve_theta_star

# Frozen with mpmath at 40 digits (see test docstrings for the expression).
DM1_THETA_D2 = 0.79681213002002004616
DM1_BOUND_D2_d5 = 0.25552099310484942030
MM1_BOUND_L2_d3 = 0.71917754881315342978  # exp(-3) + 3 exp(-1.5)
MM1_FREE_THETA_025_d3 = 0.82997950980180087549


def mm1_textbook_form(lam, mu, d):
    """Textbook three-exponential closed form, only valid away from lambda = 2 mu."""
    c = lam / (2 * mu - lam)
    return c * math.exp(-(lam - mu) * d / (lam * mu)) + math.exp(-d / mu) - c * math.exp(-d / lam)


def mm1_free_theta_textbook_form(lam, mu, theta, d):
    return (
        mu**2 * theta / ((lam - mu) * (1 - mu * theta)) * math.exp(-d / mu)
        - lam**2 * theta / ((lam - mu) * (1 - lam * theta)) * math.exp(-d / lam)
        + 1 / ((1 - mu * theta) * (1 - lam * theta)) * math.exp(-theta * d)
    )


def nested_generic(lam, mu, theta, d):
    """Direct double integral with a numeric convolution; shares no code with the package."""
    fy = lambda y: math.exp(-y / lam) / lam
    fz = lambda z: math.exp(-z / mu) / mu
    conv = lambda t: integrate.quad(lambda u: fy(u) * fz(t - u), 0, t, epsabs=1e-14)[0] if t > 0 else 0.0
    inner = integrate.quad(lambda y: (1 - math.exp(-theta * y)) * conv(d - y), 0, d, epsabs=1e-13)[0]
    return 1 - inner


# ------------------------------------------------------------------ M/M/1


def test_mm1_at_zero_is_one():
    assert violation_bound_mm1(2, 1, 0) == 1.0
    assert violation_bound_mm1(4, 1, 0) == 1.0


def test_mm1_removable_singularity_value():
    # lambda = 2 mu: terms 1 and 3 merge into (d/mu) exp(-d/lambda)
    assert violation_bound_mm1(2, 1, 3) == pytest.approx(MM1_BOUND_L2_d3, abs=1e-15)
    assert MM1_BOUND_L2_d3 == pytest.approx(nested_generic(2.0, 1.0, 0.5, 3.0), abs=1e-9)


@pytest.mark.parametrize("eps", [1e-3, 1e-6, 1e-9, 1e-11])
def test_mm1_continuous_across_singularity(eps):
    at = violation_bound_mm1(2.0, 1.0, 3.0)
    for lam in (2.0 - eps, 2.0 + eps):
        assert violation_bound_mm1(lam, 1.0, 3.0) == pytest.approx(at, abs=20 * eps + 1e-13)


@pytest.mark.parametrize("lam", [1.25, 1.5, 3.0, 4.0, 10.0])
@pytest.mark.parametrize("d", [0.3, 1.0, 3.0, 7.5, 20.0])
def test_mm1_matches_literal_formula(lam, d):
    assert violation_bound_mm1(lam, 1.0, d) == pytest.approx(mm1_textbook_form(lam, 1.0, d), abs=1e-12)


def test_mm1_tail_vanishes():
    assert violation_bound_mm1(4, 1, 1e4) == 0.0


def test_mm1_unstable():
    with pytest.raises(UnstableModel):
        violation_bound_mm1(1, 1, 3)
    with pytest.raises(UnstableModel):
        mean_bound_mm1(0.5, 1)


def test_free_theta_at_optimum_equals_closed_form():
    assert violation_bound_mm1_free_theta(2, 1, 0.5, 3) == pytest.approx(violation_bound_mm1(2, 1, 3), abs=1e-12)
    assert violation_bound_mm1_free_theta(2, 1, 0.5, 0) == 1.0


def test_free_theta_smaller_theta_is_looser():
    looser = violation_bound_mm1_free_theta(2, 1, 0.25, 3)
    assert looser >= violation_bound_mm1(2, 1, 3)
    assert looser == pytest.approx(MM1_FREE_THETA_025_d3, abs=1e-13)


@pytest.mark.parametrize("theta", [0.05, 0.2, 0.4, 0.55])
def test_free_theta_matches_literal_formula(theta):
    lam, mu, d = 4.0, 1.0, 2.5
    assert violation_bound_mm1_free_theta(lam, mu, theta, d) == pytest.approx(
        mm1_free_theta_textbook_form(lam, mu, theta, d), abs=1e-12
    )


def test_free_theta_errors():
    with pytest.raises(SingularTheta):
        violation_bound_mm1_free_theta(2, 1, 1.0, 3)
    with pytest.raises(InfeasibleTheta):
        violation_bound_mm1_free_theta(2, 1, 0.9, 3)
    with pytest.raises(InfeasibleTheta):
        violation_bound_mm1_free_theta(2, 1, 0.0, 3)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.05, 20), st.floats(0.0, 30), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_free_theta_nonincreasing_in_theta(lam, d, f1, f2):
    mu = 1.0
    star = (lam - mu) / (lam * mu)
    t1, t2 = sorted((f1 * star, f2 * star))
    b1 = violation_bound_mm1_free_theta(lam, mu, t1, d)
    b2 = violation_bound_mm1_free_theta(lam, mu, t2, d)
    assert b2 <= b1 + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(1.05, 20), st.floats(0.0, 40), st.floats(0.0, 5))
def test_mm1_nonincreasing_in_d(lam, d, step):
    assert violation_bound_mm1(lam, 1.0, d + step) <= violation_bound_mm1(lam, 1.0, d) + 1e-9


# ------------------------------------------------------------------ D/M/1


def test_dm1_examples():
    th = solve_theta_star(dm1(2, 1)).value
    assert violation_bound_dm1(2, 1, th, 2) == 1.0
    assert violation_bound_dm1(2, 1, th, 1) == 1.0
    assert violation_bound_dm1(2, 1, th, 5) == pytest.approx(DM1_BOUND_D2_d5, abs=1e-10)
    assert round(violation_bound_dm1(2, 1, th, 5), 3) == 0.256
    assert violation_bound_dm1(2, 1, th, 1e4) == 0.0


def test_dm1_literal_formula():
    th = DM1_THETA_D2
    for d in (2.5, 4.0, 9.0):
        lit = math.exp(-(d - 2) / 1) + (math.exp(th * (2 - d)) - math.exp(-(d - 2))) / (1 - th)
        assert violation_bound_dm1(2, 1, th, d) == pytest.approx(lit, abs=1e-13)


def test_dm1_errors():
    with pytest.raises(UnstableModel):
        violation_bound_dm1(1, 1, 0.5, 3)
    with pytest.raises(InfeasibleTheta):
        violation_bound_dm1(2, 1, 0.9, 3)
    with pytest.raises(InfeasibleTheta):
        mean_bound_dm1(2, 1, 1.2)


def test_dm1_accepts_any_feasible_theta():
    # any theta below theta* also satisfies the kernel condition and gives a looser bound
    assert violation_bound_dm1(2, 1, 0.5, 5) >= violation_bound_dm1(2, 1, DM1_THETA_D2, 5)


# ------------------------------------------------------------------ means


def test_mean_bound_mm1_examples():
    assert mean_bound_mm1(2, 1) == 5.0
    assert mean_bound_mm1(2, 1) - exact_mean_peak_mm1(2, 1) == 1.0
    lam = 1e3
    assert mean_bound_mm1(lam, 1.0) / (lam + 1.0) == pytest.approx(1.0, abs=2e-3)


def test_mean_bound_dm1_examples():
    assert mean_bound_dm1(2, 1, DM1_THETA_D2) == pytest.approx(4.2550009749159753, abs=1e-12)
    th = solve_theta_star(dm1(2, 1)).value
    assert mean_bound_dm1(2, 1, th) - exact_mean_peak_dm1(2, 1) == pytest.approx(1.0, abs=1e-6)


def _integrate_bound(fn, rate, breakpoints=()):
    """Integrate a mixture-of-exponentials bound: numeric until < 1e-12, then an exponential tail."""
    end = 1.0
    while fn(end) >= 1e-12:
        end *= 1.5
    total = 0.0
    edges = [0.0, *[b for b in breakpoints if b < end], end]
    for a, b in zip(edges, edges[1:]):
        total += integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-13, limit=500)[0]
    return total + fn(end) / rate


@pytest.mark.parametrize("lam", [1.25, 2.0, 4.0, 10.0])
def test_mean_integral_identity_mm1(lam):
    rate = min((lam - 1) / lam, 1 / lam)
    val = _integrate_bound(lambda d: violation_bound_mm1(lam, 1.0, d), rate)
    assert val == pytest.approx(mean_bound_mm1(lam, 1.0), rel=1e-6)


@pytest.mark.parametrize("D", [1.25, 2.0, 4.0, 10.0])
def test_mean_integral_identity_dm1(D):
    th = solve_theta_star(dm1(D, 1.0)).value
    val = _integrate_bound(lambda d: violation_bound_dm1(D, 1.0, th, d), th, breakpoints=(D,))
    assert val == pytest.approx(mean_bound_dm1(D, 1.0, th), rel=1e-6)


@pytest.mark.parametrize("mu", [0.01, 0.1, 1.0])
def test_mean_bound_mm1_minimised_at_half_utilization(mu):
    rhos = np.round(np.arange(0.01, 1.0, 0.01), 2)
    vals = [mean_bound_mm1(mu / r, mu) for r in rhos]
    assert rhos[int(np.argmin(vals))] == 0.5
    assert min(vals) == pytest.approx(5 * mu, rel=1e-12)


# ------------------------------------------------------------------ backlog


def test_backlog_tail_bound():
    assert backlog_tail_bound(0.5, 0) == 1.0
    assert backlog_tail_bound(0.5, 2) == pytest.approx(math.exp(-1), rel=1e-15)


# ------------------------------------------------------------------ generic quadrature


def test_generic_small_d_is_one():
    assert violation_bound_generic(mm1(2, 1), 0.5, 0.0) == 1.0
    assert violation_bound_generic(mm1(2, 1), 0.5, 1e-9) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("lam", [1.25, 2.0, 4.0])
@pytest.mark.parametrize("d", [0.5, 3.0, 10.0])
def test_generic_matches_mm1_closed_form(lam, d):
    th = solve_theta_star(mm1(lam, 1.0)).value
    assert violation_bound_generic(mm1(lam, 1.0), th, d) == pytest.approx(violation_bound_mm1(lam, 1.0, d), abs=1e-6)


def test_generic_numeric_convolution_matches_nested_oracle():
    # Erlang + exponential with unequal stage rates goes through the numeric convolution
    model = QueueModel(Exponential(2.0), Erlang(2, 0.8))
    th = solve_theta_star(model).value
    fy, fz = model.interarrival.pdf, model.service.pdf
    conv = lambda t: integrate.quad(lambda u: fy(u) * fz(t - u), 0, t, epsabs=1e-14)[0] if t > 0 else 0.0
    d = 4.0
    ref = 1 - integrate.quad(lambda y: -math.expm1(-th * y) * conv(d - y), 0, d, epsabs=1e-13)[0]
    assert violation_bound_generic(model, th, d) == pytest.approx(ref, abs=1e-8)


def test_generic_erlang_monte_carlo_oracle():
    """1 - E[1{S <= d} (1 - exp(-theta (d - S)))] with S = Y + Z, from 10^7 draws."""
    model = QueueModel(Exponential(2.0), Erlang(2, 0.8))
    th = solve_theta_star(model).value
    d = 5.0
    rng = np.random.default_rng(2024)
    n = 10**7
    s = rng.exponential(2.0, n) + rng.gamma(2, 0.4, n)
    g = np.where(s <= d, -np.expm1(-th * (d - s)), 0.0)
    est, se = 1 - g.mean(), g.std(ddof=1) / math.sqrt(n)
    assert abs(violation_bound_generic(model, th, d) - est) <= 3 * se


def test_generic_equal_rates_uses_erlang_sum():
    model = QueueModel(Erlang(2, 2.0), Exponential(1.0))
    h = bounds.sum_density(model)
    ref = Erlang(3, 3.0)
    for t in (0.5, 2.0, 6.0):
        assert h(t) == pytest.approx(ref.pdf(t), rel=1e-13)


def test_generic_rejects_atoms_and_infeasible_theta():
    with pytest.raises(NotAbsolutelyContinuous):
        violation_bound_generic(dm1(2, 1), 0.5, 3)
    with pytest.raises(InfeasibleTheta):
        violation_bound_generic(mm1(2, 1), 0.9, 3)


# ------------------------------------------------------------------ curves


def test_bound_curve_routes_methods():
    assert bound_curve(mm1(2, 1), [1, 2]).method == bounds.MM1_CLOSED
    assert bound_curve(dm1(2, 1), [1, 2]).method == bounds.DM1_CLOSED
    assert bound_curve(QueueModel(Exponential(2), Erlang(2, 0.8)), [1, 2]).method == bounds.GENERIC_QUADRATURE


def test_bound_curve_generic_path_on_mm1_agrees():
    m = mm1(3, 1)
    a = bound_curve(m, [0.5, 2, 8])
    b = bound_curve(m, [0.5, 2, 8], method=bounds.GENERIC_QUADRATURE)
    assert np.allclose(a.bounds, b.bounds, atol=1e-6)


def test_bound_curve_invariants():
    c = bound_curve(dm1(1.5, 1), np.linspace(0, 30, 121))
    assert all(0 <= b <= 1 for b in c.bounds)
    assert all(b2 <= b1 + 1e-9 for b1, b2 in zip(c.bounds, c.bounds[1:]))
    with pytest.raises(ValueError):
        bound_curve(mm1(2, 1), [2, 1])
    with pytest.raises(ValueError):
        BoundCurve(c.model, c.theta, ((1.0, 0.3), (2.0, 0.5)), c.method)


def test_bound_curve_unstable():
    with pytest.raises(UnstableModel):
        bound_curve(mm1(1, 1), [1])


def test_mean_bound_dispatch():
    assert bounds.mean_bound(mm1(2, 1)) == 5.0
    assert bounds.mean_bound(dm1(2, 1)) == pytest.approx(4.2550009749, abs=1e-9)
    with pytest.raises(NotImplementedError):
        bounds.mean_bound(QueueModel(Exponential(2), Erlang(2, 0.8)))
