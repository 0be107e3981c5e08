import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from peakaoi.dist import Deterministic, Erlang, Exponential
from peakaoi.errors import UnstableModel
from peakaoi.theta import BISECTION, CLOSED_FORM_MM1, QueueModel, dm1, kernel, mm1, solve_theta_star

# root of 1 - theta = exp(-2 theta), from mpmath.findroot at 40 digits
DM1_THETA_D2 = 0.79681213002002004616


def test_kernel_examples():
    assert kernel(mm1(2, 1), 0.0) == 1.0
    assert kernel(mm1(2, 1), 0.5) == pytest.approx(1.0, abs=1e-15)
    assert math.isinf(kernel(mm1(2, 1), 1.0))


def test_kernel_mm1_formula():
    lam, mu, t = 3.0, 1.0, 0.4
    assert kernel(mm1(lam, mu), t) == pytest.approx(1 / (1 - mu * t) / (1 + lam * t), rel=1e-15)


def test_theta_star_mm1_closed_form():
    ts = solve_theta_star(mm1(2, 1))
    assert ts.method == CLOSED_FORM_MM1
    assert ts.value == 0.5


def test_theta_star_dm1():
    ts = solve_theta_star(dm1(2, 1))
    assert ts.method == BISECTION
    assert ts.value == pytest.approx(DM1_THETA_D2, abs=1e-10)
    assert round(ts.value, 4) == 0.7968
    assert abs(ts.kernel_at_value - 1) <= 1e-9


def test_unstable_rejected():
    with pytest.raises(UnstableModel):
        solve_theta_star(mm1(1, 1))
    with pytest.raises(UnstableModel):
        mm1(1, 2)


def test_model_properties():
    m = dm1(4, 1)
    assert m.rho == 0.25
    assert m.is_dm1 and not m.is_mm1
    assert m.template == "dm1"
    assert QueueModel(Exponential(2), Erlang(2, 1)).template == "generic"


@pytest.mark.parametrize("lam", [1.25, 2.0, 4.0, 1.01, 50.0])
def test_bisection_agrees_with_closed_form(lam):
    model = mm1(lam, 1.0)
    closed = solve_theta_star(model).value
    bis = solve_theta_star(model, method="bisection").value
    assert abs(closed - bis) <= 1e-10


@pytest.mark.parametrize("D", [1.25, 2.0, 4.0, 10.0, 1.01])
def test_dm1_root_equation(D):
    tol = 1e-10
    th = solve_theta_star(dm1(D, 1.0), tol=tol).value
    assert abs(1 - th - math.exp(-th * D)) <= tol * max(1, D)


def test_deterministic_service_uses_doubling_bracket():
    model = QueueModel(Exponential(2.0), Deterministic(1.0))
    ts = solve_theta_star(model)
    assert abs(ts.kernel_at_value - 1) <= 1e-9
    assert kernel(model, ts.value * 1.001) > 1


model_strategy = st.one_of(
    st.builds(
        lambda a, s, rho: QueueModel(Exponential(a), Erlang(s, rho * a)),
        st.floats(0.5, 5), st.integers(1, 4), st.floats(0.05, 0.95),
    ),
    st.builds(
        lambda a, s, k, rho: QueueModel(Erlang(k, a), Erlang(s, rho * a)),
        st.floats(0.5, 5), st.integers(1, 4), st.integers(1, 4), st.floats(0.05, 0.95),
    ),
    st.builds(
        lambda a, rho: QueueModel(Deterministic(a), Exponential(rho * a)),
        st.floats(0.5, 5), st.floats(0.05, 0.95),
    ),
)


@settings(max_examples=80, deadline=None)
@given(model_strategy)
def test_theta_star_feasible_and_maximal(model):
    tol = 1e-10
    ts = solve_theta_star(model, tol=tol, method="bisection")
    assert ts.value > 0
    assert ts.value < model.theta_max
    assert kernel(model, ts.value) <= 1 + tol
    probe = ts.value + 10 * tol
    assume(probe < model.theta_max)
    assert kernel(model, probe) > 1


@given(model_strategy)
def test_kernel_at_zero_is_one(model):
    assert kernel(model, 0.0) == 1.0
