"""Upper bounds on the peak-AoI violation probability ``Pr{P > d}`` and on its mean.

The generic bound is

    Pr{P > d} <= 1 - int_0^d (1 - exp(-theta y)) (f_Y * f_Z)(d - y) dy

for any ``theta`` with ``E[exp(theta Z)] E[exp(-theta Y)] <= 1``. The M/M/1
and D/M/1 closed forms are that integral evaluated analytically.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from scipy import integrate

from .dist import EXPONENTIAL, Erlang
from .errors import (
    InfeasibleTheta,
    NotAbsolutelyContinuous,
    QuadratureFailure,
    SingularTheta,
    UnstableModel,
)
from .theta import QueueModel, ThetaStar, kernel, solve_theta_star

GENERIC_QUADRATURE = "generic_quadrature"
MM1_CLOSED = "mm1_closed"
DM1_CLOSED = "dm1_closed"

FEASIBILITY_TOL = 1e-9
MONOTONE_TOL = 1e-9
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class QuadConfig:
    abs_tol: float = 1e-9
    max_panels: int = 10_000


def _clamp(p: float) -> float:
    return min(1.0, max(0.0, p))


def _exp_diff(a: float, b: float, t: float) -> float:
    """``(exp(-a t) - exp(-b t)) / (b - a)``, finite and accurate as ``b -> a``."""
    if a > b:
        # symmetric in (a, b); factor out the slower decay so expm1 cannot overflow
        a, b = b, a
    h = b - a
    if h == 0.0:
        return t * math.exp(-a * t)
    return math.exp(-a * t) * -math.expm1(-h * t) / h


# --------------------------------------------------------------------------- M/M/1


def _check_mm1(lambda_t, mu_t):
    if not (mu_t > 0 and lambda_t > mu_t):
        raise UnstableModel(f"M/M/1 needs lambda > mu > 0, got lambda={lambda_t}, mu={mu_t}")


def _mm1_raw(lambda_t: float, mu_t: float, theta: float, d: float) -> float:
    # Same three exponentials as the textbook closed form, regrouped so that
    # theta = 1/lambda (and lambda = 2 mu at theta*) is not a 0/0.
    if d <= 0:
        return 1.0
    a, b = 1.0 / mu_t, 1.0 / lambda_t
    tail_sum = math.exp(-b * d) + b * _exp_diff(b, a, d)
    discount = a * b / (a - b) * (_exp_diff(theta, b, d) - _exp_diff(theta, a, d))
    return tail_sum + discount


def violation_bound_mm1_free_theta(lambda_t: float, mu_t: float, theta: float, d: float) -> float:
    """M/M/1 bound at an arbitrary feasible decay rate ``theta``."""
    _check_mm1(lambda_t, mu_t)
    if not theta > 0:
        raise InfeasibleTheta(f"theta must be positive, got {theta}")
    if theta >= 1.0 / mu_t - SINGULAR_TOL:
        raise SingularTheta(f"theta={theta} is at or beyond the service MGF pole 1/mu={1 / mu_t}")
    k = 1.0 / ((1.0 - mu_t * theta) * (1.0 + lambda_t * theta))
    if k > 1.0 + FEASIBILITY_TOL:
        raise InfeasibleTheta(f"kernel({theta}) = {k} > 1")
    return _clamp(_mm1_raw(lambda_t, mu_t, theta, d))


def violation_bound_mm1(lambda_t: float, mu_t: float, d: float) -> float:
    """M/M/1 bound at the optimal rate ``theta* = (lambda - mu) / (lambda mu)``.

    >>> round(violation_bound_mm1(4.0, 1.0, 0.0), 12)
    1.0
    """
    _check_mm1(lambda_t, mu_t)
    theta = (lambda_t - mu_t) / (lambda_t * mu_t)
    return _clamp(_mm1_raw(lambda_t, mu_t, theta, d))


def mean_bound_mm1(lambda_t: float, mu_t: float) -> float:
    _check_mm1(lambda_t, mu_t)
    return lambda_t**2 / (lambda_t - mu_t) + mu_t


# --------------------------------------------------------------------------- D/M/1


def _check_dm1(D, mu_t, theta_star):
    if not (mu_t > 0 and D > mu_t):
        raise UnstableModel(f"D/M/1 needs D > mu > 0, got D={D}, mu={mu_t}")
    if not (0 < theta_star < 1.0 / mu_t):
        raise InfeasibleTheta(f"theta*={theta_star} outside (0, 1/mu)")
    gap = math.exp(-theta_star * D) - (1.0 - mu_t * theta_star)
    if gap > FEASIBILITY_TOL:
        raise InfeasibleTheta(f"theta*={theta_star} violates exp(-theta D) <= 1 - mu theta by {gap:.3g}")


def _dm1_raw(D, mu_t, theta_star, d):
    if d <= D:
        # P = max(B + Z', D) + Z > D almost surely
        return 1.0
    t = d - D
    return math.exp(-t / mu_t) + _exp_diff(theta_star, 1.0 / mu_t, t) / mu_t


def violation_bound_dm1(D: float, mu_t: float, theta_star: float, d: float) -> float:
    _check_dm1(D, mu_t, theta_star)
    return _clamp(_dm1_raw(D, mu_t, theta_star, d))


def mean_bound_dm1(D: float, mu_t: float, theta_star: float) -> float:
    _check_dm1(D, mu_t, theta_star)
    return D + mu_t + 1.0 / theta_star


def backlog_tail_bound(theta: float, y: float) -> float:
    """Upper bound ``exp(-theta y)`` on ``Pr{B > y}`` for a kernel-feasible ``theta``."""
    if y <= 0:
        return 1.0
    return math.exp(-theta * y)


# --------------------------------------------------------------------------- generic


def sum_density(model: QueueModel, quad: QuadConfig = QuadConfig()):
    """Return ``t -> (f_Y * f_Z)(t)``, analytic where the pair allows it."""
    Y, Z = model.interarrival, model.service
    for spec in (Y, Z):
        if not spec.is_continuous:
            raise NotAbsolutelyContinuous(
                f"{spec} has an atom; use the D/M/1 closed form for deterministic arrivals"
            )
    a, b = Y.stage_rate, Z.stage_rate
    if a == b:
        # equal stage rates: the sum is Erlang with the stage counts added
        total = Erlang(Y.shape + Z.shape, (Y.shape + Z.shape) / a)
        return total.pdf
    if Y.kind == EXPONENTIAL and Z.kind == EXPONENTIAL:
        return lambda t: a * b * _exp_diff(a, b, t) if t > 0 else 0.0

    def numeric(t: float) -> float:
        if t <= 0:
            return 0.0
        val, err = integrate.quad(
            lambda u: Y.pdf(u) * Z.pdf(t - u), 0.0, t,
            epsabs=quad.abs_tol * 1e-2, epsrel=1e-12, limit=quad.max_panels,
        )
        return val

    return numeric


def violation_bound_generic(model: QueueModel, theta: float, d: float, quad: QuadConfig = QuadConfig()) -> float:
    """Bound by direct numerical integration, valid for any continuous pair."""
    h = sum_density(model, quad)
    if not theta > 0:
        raise InfeasibleTheta(f"theta must be positive, got {theta}")
    k = kernel(model, theta)
    if k > 1.0 + FEASIBILITY_TOL:
        raise InfeasibleTheta(f"kernel({theta}) = {k} > 1")
    if d <= 0:
        return 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            lambda y: -math.expm1(-theta * y) * h(d - y), 0.0, d,
            epsabs=quad.abs_tol, epsrel=0.0, limit=quad.max_panels, full_output=1,
        )
    val, err = out[0], out[1]
    if len(out) > 3 and err > quad.abs_tol:
        raise QuadratureFailure(f"quadrature error estimate {err:.3g} exceeds {quad.abs_tol:g}: {out[3]}")
    return _clamp(1.0 - val)


# --------------------------------------------------------------------------- curves


@dataclass(frozen=True)
class BoundCurve:
    model: QueueModel
    theta: ThetaStar
    points: tuple
    method: str
    clamped: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ds = [d for d, _ in self.points]
        if any(d2 <= d1 for d1, d2 in zip(ds, ds[1:])):
            raise ValueError("BoundCurve points must be strictly increasing in d")
        bs = [b for _, b in self.points]
        if any(not 0.0 <= b <= 1.0 for b in bs):
            raise ValueError("bound values must lie in [0, 1]")
        for (d1, b1), (d2, b2) in zip(self.points, self.points[1:]):
            if b2 > b1 + MONOTONE_TOL:
                raise ValueError(f"bound increases between d={d1} ({b1}) and d={d2} ({b2})")

    @property
    def d(self):
        return [p[0] for p in self.points]

    @property
    def bounds(self):
        return [p[1] for p in self.points]


def select_method(model: QueueModel) -> str:
    if model.is_mm1:
        return MM1_CLOSED
    if model.is_dm1:
        return DM1_CLOSED
    return GENERIC_QUADRATURE


def bound_point(model: QueueModel, theta: float, d: float, method: str, quad: QuadConfig = QuadConfig()) -> float:
    """Unclamped bound at one threshold for an already-validated ``theta``."""
    if method == MM1_CLOSED:
        return _mm1_raw(model.interarrival.mean(), model.service.mean(), theta, d)
    if method == DM1_CLOSED:
        return _dm1_raw(model.interarrival.mean(), model.service.mean(), theta, d)
    if method == GENERIC_QUADRATURE:
        return violation_bound_generic(model, theta, d, quad)
    raise ValueError(f"unknown method {method!r}")


def bound_curve(
    model: QueueModel,
    d_grid,
    theta: ThetaStar | None = None,
    method: str | None = None,
    quad: QuadConfig = QuadConfig(),
) -> BoundCurve:
    """Evaluate the bound over ``d_grid`` (strictly increasing) for ``model``."""
    model.require_strictly_stable()
    if theta is None:
        theta = solve_theta_star(model)
    method = method or select_method(model)
    if method == MM1_CLOSED and not model.is_mm1:
        raise ValueError("mm1 closed form requested for a non-M/M/1 model")
    if method == DM1_CLOSED:
        if not model.is_dm1:
            raise ValueError("dm1 closed form requested for a non-D/M/1 model")
        _check_dm1(model.interarrival.mean(), model.service.mean(), theta.value)
    points, clamped = [], False
    for d in d_grid:
        raw = bound_point(model, theta.value, float(d), method, quad)
        b = _clamp(raw)
        clamped |= b != raw
        points.append((float(d), b))
    return BoundCurve(model, theta, tuple(points), method, clamped)


def mean_bound(model: QueueModel, theta: ThetaStar | None = None) -> float:
    """Mean peak-AoI bound for the M/M/1 and D/M/1 templates."""
    model.require_strictly_stable()
    if model.is_mm1:
        return mean_bound_mm1(model.interarrival.mean(), model.service.mean())
    if model.is_dm1:
        theta = theta or solve_theta_star(model)
        return mean_bound_dm1(model.interarrival.mean(), model.service.mean(), theta.value)
    raise NotImplementedError("closed-form mean bound exists only for M/M/1 and D/M/1")
