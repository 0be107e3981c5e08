"""Probabilistic peak Age-of-Information bounds for single-server FCFS queues."""
from .bounds import (
    BoundCurve,
    QuadConfig,
    backlog_tail_bound,
    bound_curve,
    mean_bound,
    mean_bound_dm1,
    mean_bound_mm1,
    violation_bound_dm1,
    violation_bound_generic,
    violation_bound_mm1,
    violation_bound_mm1_free_theta,
)
from .dist import Deterministic, DistributionSpec, Erlang, Exponential, parse_literal
from .errors import (
    InfeasibleTheta,
    NoPositiveTheta,
    NotAbsolutelyContinuous,
    PeakAoIError,
    QuadratureFailure,
    SingularTheta,
    UnstableModel,
)
from .exact import Dm1Root, exact_mean_peak_dm1, exact_mean_peak_mm1, solve_sigma_dm1
from .simulate import SimConfig, SimResult, max_plus_reference, simulate_backlog, simulate_peak_aoi
from .theta import QueueModel, ThetaStar, dm1, kernel, mm1, solve_theta_star

__version__ = "0.1.0"
