"""Exact mean peak AoI for M/M/1 and D/M/1 from classical queueing theory.

Mean peak AoI under FCFS is ``E[Y] + E[T]`` with ``T`` the stationary sojourn
time. Parameters are mean times, not rates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import optimize

from .errors import UnstableModel


@dataclass(frozen=True)
class Dm1Root:
    """Root ``sigma`` in (0, 1) of ``sigma = exp(-D (1 - sigma) / mu)``."""

    sigma: float
    residual: float


def exact_mean_peak_mm1(lambda_t: float, mu_t: float) -> float:
    if not (mu_t > 0 and lambda_t > mu_t):
        raise UnstableModel(f"M/M/1 needs lambda > mu > 0, got lambda={lambda_t}, mu={mu_t}")
    return lambda_t + lambda_t * mu_t / (lambda_t - mu_t)


def solve_sigma_dm1(D: float, mu_t: float, tol: float = 1e-15) -> Dm1Root:
    """Unique nontrivial root of the GI/M/1 fixed point for deterministic arrivals."""
    if not (mu_t > 0 and D > mu_t):
        raise UnstableModel(f"D/M/1 needs D > mu > 0, got D={D}, mu={mu_t}")
    r = D / mu_t

    def g(s):
        return s - math.exp(-r * (1.0 - s))

    # g(0) < 0, g -> 0 at the trivial root s = 1 and g > 0 just below it
    eps = 0.5
    while g(1.0 - eps) <= 0.0:
        eps *= 0.5
        if eps < 1e-300:
            raise UnstableModel(f"no sigma < 1 for D/mu = {r}")
    hi = 1.0 - eps
    if g(0.0) == 0.0:
        sigma = 0.0
    else:
        sigma = optimize.brentq(g, 0.0, hi, xtol=tol, rtol=1e-15, maxiter=500)
    return Dm1Root(sigma, sigma - math.exp(-r * (1.0 - sigma)))


def exact_mean_peak_dm1(D: float, mu_t: float) -> float:
    root = solve_sigma_dm1(D, mu_t)
    return D + mu_t / (1.0 - root.sigma)
