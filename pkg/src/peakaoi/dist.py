"""Nonnegative random-variable models for inter-arrival and service times.

Every model is parameterised by its mean time (not a rate), so an
exponential with ``mean_time=2`` has density ``0.5 * exp(-x / 2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import NotAbsolutelyContinuous

EXPONENTIAL = "exp"
DETERMINISTIC = "det"
ERLANG = "erlang"

_KIND_ALIASES = {
    "exp": EXPONENTIAL,
    "exponential": EXPONENTIAL,
    "m": EXPONENTIAL,
    "det": DETERMINISTIC,
    "deterministic": DETERMINISTIC,
    "d": DETERMINISTIC,
    "erlang": ERLANG,
}


@dataclass(frozen=True)
class DistributionSpec:
    """Immutable description of a positive random time.

    ``kind`` is one of ``"exp"``, ``"det"`` or ``"erlang"``; ``mean_time`` is
    the mean (for ``"det"``, the constant value) and ``shape`` is the Erlang
    stage count (always 1 for the other kinds).
    """

    kind: str
    mean_time: float
    shape: int = 1

    def __post_init__(self):
        if self.kind not in (EXPONENTIAL, DETERMINISTIC, ERLANG):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not (math.isfinite(self.mean_time) and self.mean_time > 0):
            raise ValueError(f"mean_time must be positive and finite, got {self.mean_time}")
        if int(self.shape) != self.shape or self.shape < 1:
            raise ValueError(f"shape must be a positive integer, got {self.shape}")
        if self.kind != ERLANG and self.shape != 1:
            raise ValueError("shape only applies to the Erlang variant")
        object.__setattr__(self, "mean_time", float(self.mean_time))
        object.__setattr__(self, "shape", int(self.shape))

    @property
    def is_continuous(self) -> bool:
        return self.kind != DETERMINISTIC

    @property
    def stage_rate(self) -> float:
        """Rate of each exponential stage (``shape / mean_time``)."""
        return self.shape / self.mean_time

    @property
    def mgf_boundary(self) -> float:
        """Supremum of the MGF domain: ``inf`` for a constant."""
        if self.kind == DETERMINISTIC:
            return math.inf
        return self.stage_rate

    def mean(self) -> float:
        return self.mean_time

    def variance(self) -> float:
        if self.kind == DETERMINISTIC:
            return 0.0
        return self.mean_time**2 / self.shape

    def pdf(self, x: float) -> float:
        if self.kind == DETERMINISTIC:
            raise NotAbsolutelyContinuous(f"{self.to_literal()} has no density")
        if x < 0:
            return 0.0
        r = self.stage_rate
        if self.kind == EXPONENTIAL:
            return r * math.exp(-r * x)
        k = self.shape
        if x == 0:
            return r if k == 1 else 0.0
        log_f = k * math.log(r) + (k - 1) * math.log(x) - r * x - math.lgamma(k)
        return math.exp(log_f)

    def cdf(self, x: float) -> float:
        if x < 0:
            return 0.0
        if self.kind == DETERMINISTIC:
            return 1.0 if x >= self.mean_time else 0.0
        if self.kind == EXPONENTIAL:
            return -math.expm1(-x / self.mean_time)
        return float(special.gammainc(self.shape, self.stage_rate * x))

    def sf(self, x: float) -> float:
        """Survival function ``P{X > x}``, accurate in the far tail."""
        if x < 0:
            return 1.0
        if self.kind == DETERMINISTIC:
            return 0.0 if x >= self.mean_time else 1.0
        if self.kind == EXPONENTIAL:
            return math.exp(-x / self.mean_time)
        return float(special.gammaincc(self.shape, self.stage_rate * x))

    def mgf(self, theta: float) -> float:
        """``E[exp(theta X)]``; returns ``math.inf`` outside the MGF domain."""
        if theta == 0:
            return 1.0
        if self.kind == DETERMINISTIC:
            return math.exp(theta * self.mean_time)
        if theta >= self.stage_rate:
            return math.inf
        return (1.0 - theta / self.stage_rate) ** (-self.shape)

    def sample(self, rng: np.random.Generator) -> float:
        """One draw. A constant consumes no randomness."""
        if self.kind == DETERMINISTIC:
            return self.mean_time
        if self.kind == EXPONENTIAL:
            return float(rng.exponential(self.mean_time))
        return float(rng.gamma(self.shape, 1.0 / self.stage_rate))

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == DETERMINISTIC:
            return np.full(n, self.mean_time)
        if self.kind == EXPONENTIAL:
            return rng.exponential(self.mean_time, n)
        return rng.gamma(self.shape, 1.0 / self.stage_rate, n)

    def to_literal(self) -> str:
        m = format(self.mean_time, ".17g")
        if self.kind == EXPONENTIAL:
            return f"exp:mean={m}"
        if self.kind == DETERMINISTIC:
            return f"det:value={m}"
        return f"erlang:shape={self.shape},mean={m}"

    def __str__(self):
        return self.to_literal()


def Exponential(mean_time: float) -> DistributionSpec:
    return DistributionSpec(EXPONENTIAL, mean_time)


def Deterministic(value: float) -> DistributionSpec:
    return DistributionSpec(DETERMINISTIC, value)


def Erlang(shape: int, mean_time: float) -> DistributionSpec:
    return DistributionSpec(ERLANG, mean_time, shape)


def parse_literal(text: str) -> DistributionSpec:
    """Parse ``exp:mean=2.0``, ``det:value=1.0`` or ``erlang:shape=3,mean=0.9``."""
    head, sep, body = text.strip().partition(":")
    kind = _KIND_ALIASES.get(head.strip().lower())
    if not sep or kind is None:
        raise ValueError(f"bad distribution literal {text!r}")
    params = {}
    for item in filter(None, (p.strip() for p in body.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"bad parameter {item!r} in {text!r}")
        params[key.strip().lower()] = value.strip()

    def take(*names):
        for name in names:
            if name in params:
                return params.pop(name)
        raise ValueError(f"{text!r} is missing parameter {names[0]!r}")

    try:
        if kind == EXPONENTIAL:
            spec = Exponential(float(take("mean", "mean_time")))
        elif kind == DETERMINISTIC:
            spec = Deterministic(float(take("value", "mean")))
        else:
            shape = float(take("shape", "k"))
            if shape != int(shape):
                raise ValueError(f"Erlang shape must be an integer in {text!r}")
            spec = Erlang(int(shape), float(take("mean", "mean_time")))
    except ValueError as exc:
        raise ValueError(f"bad distribution literal {text!r}: {exc}") from None
    if params:
        raise ValueError(f"unexpected parameters {sorted(params)} in {text!r}")
    return spec
