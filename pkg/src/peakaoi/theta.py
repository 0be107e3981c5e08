"""Queue models and the optimal exponential decay rate of the backlog bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .dist import DETERMINISTIC, EXPONENTIAL, DistributionSpec, Deterministic, Exponential
from .errors import NoPositiveTheta, UnstableModel

DEFAULT_TOL = 1e-10

CLOSED_FORM_MM1 = "closed_form_mm1"
BISECTION = "bisection"


@dataclass(frozen=True)
class QueueModel:
    """Single-server FCFS queue: inter-arrival time ``Y`` and service time ``Z``."""

    interarrival: DistributionSpec
    service: DistributionSpec

    def __post_init__(self):
        if self.service.mean() > self.interarrival.mean():
            raise UnstableModel(
                f"mean service {self.service.mean():g} exceeds mean inter-arrival "
                f"{self.interarrival.mean():g}"
            )

    @property
    def rho(self) -> float:
        return self.service.mean() / self.interarrival.mean()

    @property
    def theta_max(self) -> float:
        return self.service.mgf_boundary

    @property
    def is_mm1(self) -> bool:
        return self.interarrival.kind == EXPONENTIAL and self.service.kind == EXPONENTIAL

    @property
    def is_dm1(self) -> bool:
        return self.interarrival.kind == DETERMINISTIC and self.service.kind == EXPONENTIAL

    @property
    def template(self) -> str:
        if self.is_mm1:
            return "mm1"
        if self.is_dm1:
            return "dm1"
        return "generic"

    def require_strictly_stable(self):
        if not self.rho < 1:
            raise UnstableModel(f"utilization rho={self.rho:.17g} must be < 1")

    def describe(self) -> str:
        return f"Y={self.interarrival} Z={self.service} rho={self.rho:.6g}"


def mm1(lambda_t: float, mu_t: float) -> QueueModel:
    """M/M/1 with mean inter-arrival time ``lambda_t`` and mean service ``mu_t``."""
    return QueueModel(Exponential(lambda_t), Exponential(mu_t))


def dm1(D: float, mu_t: float) -> QueueModel:
    return QueueModel(Deterministic(D), Exponential(mu_t))


@dataclass(frozen=True)
class ThetaStar:
    value: float
    kernel_at_value: float
    method: str
    tolerance: float


def kernel(model: QueueModel, theta: float) -> float:
    """``E[exp(theta Z)] * E[exp(-theta Y)]``; ``inf`` past the service MGF domain."""
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta}")
    mz = model.service.mgf(theta)
    if math.isinf(mz):
        return math.inf
    return mz * model.interarrival.mgf(-theta)


def solve_theta_star(model: QueueModel, tol: float = DEFAULT_TOL, method: str = "auto") -> ThetaStar:
    """Largest ``theta`` with ``kernel(model, theta) <= 1``.

    ``method="auto"`` uses the M/M/1 closed form when it applies and
    bisection otherwise; ``method="bisection"`` forces the numeric path.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    model.require_strictly_stable()
    if method not in ("auto", BISECTION):
        raise ValueError(f"unknown method {method!r}")

    if method == "auto" and model.is_mm1:
        lam, mu = model.interarrival.mean(), model.service.mean()
        value = (lam - mu) / (lam * mu)
        return ThetaStar(value, kernel(model, value), CLOSED_FORM_MM1, tol)

    lo, hi = _bracket_root(model, tol)
    # log-kernel is convex, so {kernel <= 1} = [0, theta*]: lo feasible, hi not.
    # Bisect to adjacent doubles, not just to tol: near the service MGF pole
    # the kernel is steep and a tol-wide bracket leaves |kernel - 1| >> tol.
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if kernel(model, mid) <= 1.0:
            lo = mid
        else:
            hi = mid
    return ThetaStar(lo, kernel(model, lo), BISECTION, tol)


def _bracket_root(model: QueueModel, tol: float) -> tuple[float, float]:
    theta_max = model.theta_max
    if math.isinf(theta_max):
        # constant service: kernel grows without bound, double until infeasible
        hi = 1.0 / model.service.mean()
        while kernel(model, hi) <= 1.0:
            hi *= 2.0
            if hi > 1e300:
                raise NoPositiveTheta(f"kernel never exceeds 1 for {model.describe()}")
        top = hi
    else:
        top = theta_max - tol
        hi = theta_max
    # walk down geometrically from the top of the domain to the first feasible point
    theta = top
    for _ in range(200):
        if kernel(model, theta) < 1.0:
            return theta, hi
        hi = theta
        theta *= 0.5
        if theta < tol:
            break
    raise NoPositiveTheta(f"no theta in (0, {theta_max:g}) with kernel <= 1 for {model.describe()}")
