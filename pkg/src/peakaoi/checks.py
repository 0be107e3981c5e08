"""Invariant suite behind ``peak-aoi validate``.

Each check returns a :class:`CheckResult` carrying the measured margin
(positive means slack, negative means violation) so reports show how close
every property came to failing.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import bounds, exact
from .dist import Erlang, Exponential
from .simulate import SimConfig, draw_increments, lindley_waits, max_plus_peaks, simulate_backlog, simulate_peak_aoi
from .theta import QueueModel, dm1, kernel, mm1, solve_theta_star


@dataclass
class CheckResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} margin={self.margin:+.3e}  {self.detail}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    return wrapper


def frange(start: float, stop: float, step: float) -> list[float]:
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 12) for i in range(n + 1)]


@_timed
def check_closed_vs_quadrature(lambda_ratios=(1.25, 2.0, 4.0), tol=1e-6) -> CheckResult:
    worst = 0.0
    for r in lambda_ratios:
        model = mm1(r, 1.0)
        theta = solve_theta_star(model).value
        for d in frange(0.5, 10.0, 0.5):
            diff = abs(bounds.violation_bound_mm1(r, 1.0, d) - bounds.violation_bound_generic(model, theta, d))
            worst = max(worst, diff)
    return CheckResult("closed_form_vs_quadrature", worst <= tol, tol - worst, f"max |diff|={worst:.3e}")


@_timed
def check_dominance(cfg: SimConfig, rhos=(0.3, 0.5, 0.7), d_grid=range(1, 11), n_se=3.0) -> CheckResult:
    worst, where = math.inf, ""
    for name, build in (("mm1", lambda r: mm1(1.0 / r, 1.0)), ("dm1", lambda r: dm1(1.0 / r, 1.0))):
        for rho in rhos:
            model = build(rho)
            curve = bounds.bound_curve(model, list(d_grid))
            sim = simulate_peak_aoi(model, cfg)
            for (d, b), est in zip(curve.points, sim.violations(curve.d)):
                slack = b + n_se * est.stderr - est.p
                if slack < worst:
                    worst, where = slack, f"{name} rho={rho} d={d:g}"
    return CheckResult("bound_dominance", worst >= 0, worst, f"tightest at {where}")


@_timed
def check_gap_identity(mu=0.01, rho_grid=None) -> CheckResult:
    rho_grid = rho_grid or frange(0.05, 0.95, 0.05)
    worst_mm1 = worst_dm1 = 0.0
    for rho in rho_grid:
        lam = mu / rho
        worst_mm1 = max(worst_mm1, abs(bounds.mean_bound_mm1(lam, mu) - exact.exact_mean_peak_mm1(lam, mu) - mu))
        th = solve_theta_star(dm1(lam, mu)).value
        worst_dm1 = max(worst_dm1, abs(bounds.mean_bound_dm1(lam, mu, th) - exact.exact_mean_peak_dm1(lam, mu) - mu))
    margin = min(1e-12 - worst_mm1, 1e-6 - worst_dm1)
    return CheckResult("gap_equals_mu", margin >= 0, margin, f"mm1 {worst_mm1:.2e}, dm1 {worst_dm1:.2e}")


def violation_vs_rho(template: str, mu: float, d: float, rho_grid) -> list[float]:
    out = []
    for rho in rho_grid:
        lam = mu / rho
        if template == "mm1":
            out.append(bounds.violation_bound_mm1(lam, mu, d))
        else:
            th = solve_theta_star(dm1(lam, mu)).value
            out.append(bounds.violation_bound_dm1(lam, mu, th, d))
    return out


@_timed
def check_optimal_utilization() -> CheckResult:
    grid = frange(0.01, 0.99, 0.01)
    problems = []
    for mu in (0.01, 0.1, 1.0):
        means = [bounds.mean_bound_mm1(mu / r, mu) for r in grid]
        best = grid[int(np.argmin(means))]
        if abs(best - 0.5) > 0.01 + 1e-12:
            problems.append(f"mm1 mean argmin {best} at mu={mu}")
    dm1_argmins = []
    for template in ("mm1", "dm1"):
        for mu in (0.5, 1.0, 2.0):
            vals = violation_vs_rho(template, mu, 3.0, grid)
            i = int(np.argmin(vals))
            if i in (0, len(grid) - 1):
                problems.append(f"{template} mu={mu} argmin at endpoint {grid[i]}")
            if template == "dm1":
                dm1_argmins.append(grid[i])
    if any(b < a for a, b in zip(dm1_argmins, dm1_argmins[1:])):
        problems.append(f"dm1 argmins not nondecreasing in mu: {dm1_argmins}")
    detail = "; ".join(problems) or f"dm1 argmin over mu=(0.5,1,2): {dm1_argmins}"
    return CheckResult("optimal_utilization", not problems, 0.0 if not problems else -1.0, detail)


@_timed
def check_theta_identities() -> CheckResult:
    worst_mm1 = 0.0
    for r in (1.25, 2.0, 4.0):
        model = mm1(r, 1.0)
        closed = solve_theta_star(model).value
        bis = solve_theta_star(model, method="bisection").value
        worst_mm1 = max(worst_mm1, abs(closed - bis))
    worst_k = worst_s = 0.0
    for r in (1.25, 2.0, 4.0, 10.0):
        th = solve_theta_star(dm1(r, 1.0))
        sigma = exact.solve_sigma_dm1(r, 1.0).sigma
        worst_k = max(worst_k, abs(th.kernel_at_value - 1.0))
        worst_s = max(worst_s, abs(th.value - (1.0 - sigma)))
    margin = min(1e-9 - worst_mm1, 1e-9 - worst_k, 1e-8 - worst_s)
    return CheckResult(
        "theta_star_identities", margin >= 0, margin,
        f"mm1 closed-vs-bisection {worst_mm1:.1e}, dm1 |kernel-1| {worst_k:.1e}, |theta-(1-sigma)| {worst_s:.1e}",
    )


@_timed
def check_theta_feasible(model: QueueModel, theta: float) -> CheckResult:
    k = kernel(model, theta)
    return CheckResult("kernel_feasibility", k <= 1.0 + 1e-9, 1.0 - k, f"kernel({theta:g}) = {k:.6g} on {model.describe()}")


@_timed
def check_backlog_tail(cfg: SimConfig, ys=(1, 2, 4, 8), theta: float | None = None) -> CheckResult:
    model = mm1(2.0, 1.0)
    theta = solve_theta_star(model).value if theta is None else theta
    sim = simulate_backlog(model, cfg)
    worst, where = math.inf, ""
    for y in ys:
        est = sim.backlog_tail(y)
        slack = bounds.backlog_tail_bound(theta, y) + 3 * est.stderr - est.p
        if slack < worst:
            worst, where = slack, f"y={y}"
    return CheckResult("backlog_tail_bound", worst >= 0, worst, f"tightest at {where}")


@_timed
def check_max_plus(seeds=20, n_packets=1000) -> CheckResult:
    models = (mm1(2.0, 1.0), dm1(1.5, 1.0), QueueModel(Exponential(2.0), Erlang(2, 0.8)))
    worst = 0.0
    for model in models:
        for seed in range(seeds):
            Y, Z = draw_increments(model, n_packets, np.random.default_rng(seed))
            lind = Y + lindley_waits(Y, Z) + Z
            worst = max(worst, float(np.max(np.abs(lind - max_plus_peaks(Y, Z)))))
    return CheckResult("max_plus_equivalence", worst <= 1e-12, 1e-12 - worst, f"max |diff|={worst:.2e}")


@_timed
def check_boundary(models=None) -> CheckResult:
    """Bound is 1 as d -> 0 and nonincreasing in d."""
    models = models or [mm1(1 / r, 1.0) for r in (0.3, 0.5, 0.7)] + [dm1(1 / r, 1.0) for r in (0.3, 0.5, 0.7)]
    worst_zero = 0.0
    worst_rise = -math.inf
    for model in models:
        curve = bounds.bound_curve(model, [1e-12] + frange(0.05, 40.0, 0.05))
        worst_zero = max(worst_zero, abs(curve.bounds[0] - 1.0))
        b = np.asarray(curve.bounds)
        worst_rise = max(worst_rise, float(np.max(np.diff(b))))
    margin = min(1e-9 - worst_zero, 1e-9 - worst_rise)
    return CheckResult("boundary_and_monotone", margin >= 0, margin, f"|bound(0+)-1|={worst_zero:.1e}, max rise {worst_rise:.1e}")


def run_suite(quick: bool = False, theta_override: float | None = None, seed: int = 0) -> list[CheckResult]:
    if quick:
        cfg = SimConfig(num_packets=200_000, warmup_packets=2_000, replications=4, base_seed=seed)
    else:
        cfg = SimConfig(num_packets=1_000_000, warmup_packets=10_000, replications=20, base_seed=seed)
    backlog_cfg = SimConfig(cfg.num_packets, cfg.warmup_packets, 1, seed)
    ref = mm1(2.0, 1.0)
    theta = solve_theta_star(ref).value if theta_override is None else theta_override
    results = [
        check_theta_feasible(ref, theta),
        check_theta_identities(),
        check_closed_vs_quadrature((2.0,) if quick else (1.25, 2.0, 4.0)),
        check_gap_identity(),
        check_optimal_utilization(),
        check_max_plus(seeds=5 if quick else 20),
        check_boundary(),
        check_backlog_tail(backlog_cfg, theta=theta),
        check_dominance(cfg),
    ]
    return results
