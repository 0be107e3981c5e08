"""Monte Carlo of a GI/GI/1 FCFS queue: peak-AoI and backlog samples.

Packet ``k`` (1-based) arrives ``Y_k`` after packet ``k-1`` (with the
virtual packet 0 at time 0), waits ``W_k`` and is served for ``Z_k``, so its
peak AoI is ``P(k) = Y_k + W_k + Z_k`` with the Lindley recursion
``W_k = max(0, W_{k-1} + Z_{k-1} - Y_k)`` and ``W_1 = 0``.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import UnstableModel
from .theta import QueueModel

LOW_CONFIDENCE_P = 1e-4
THREADS_ENV = "AOI_BOUND_THREADS"


@dataclass(frozen=True)
class SimConfig:
    num_packets: int = 1_000_000
    warmup_packets: int = 10_000
    replications: int = 20
    base_seed: int = 0

    def __post_init__(self):
        if self.num_packets < 1:
            raise ValueError("num_packets must be positive")
        if not 0 <= self.warmup_packets < self.num_packets:
            raise ValueError("need 0 <= warmup_packets < num_packets")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")

    @property
    def retained(self) -> int:
        return self.num_packets - self.warmup_packets


@dataclass
class ViolationEstimate:
    d: float
    p: float
    stderr: float
    n_samples: int
    per_replication: list
    stderr_between: float = math.nan

    @property
    def low_confidence(self) -> bool:
        return self.p < LOW_CONFIDENCE_P


@dataclass
class SimResult:
    model: QueueModel
    config: SimConfig
    peak_samples: list
    per_replication_seed: list
    backlog_samples: list | None = None
    raw: list | None = field(default=None, repr=False)

    @property
    def n_samples(self) -> int:
        return sum(len(p) for p in self.peak_samples)

    def violation(self, d: float) -> ViolationEstimate:
        counts = [int(np.count_nonzero(p > d)) for p in self.peak_samples]
        return _fraction_estimate(d, counts, [len(p) for p in self.peak_samples])

    def violations(self, d_grid) -> list[ViolationEstimate]:
        return [self.violation(float(d)) for d in d_grid]

    def backlog_tail(self, y: float) -> ViolationEstimate:
        if self.backlog_samples is None:
            raise ValueError("backlog samples were not recorded")
        counts = [int(np.count_nonzero(b > y)) for b in self.backlog_samples]
        return _fraction_estimate(y, counts, [len(b) for b in self.backlog_samples])

    def mean_peak(self) -> tuple[float, float]:
        """Pooled mean and its standard error (batch means over replications)."""
        return _pooled_mean(self.peak_samples)

    def mean_backlog(self) -> tuple[float, float]:
        return _pooled_mean(self.backlog_samples)


def _fraction_estimate(x, counts, sizes) -> ViolationEstimate:
    n = sum(sizes)
    p = sum(counts) / n
    per = [c / s for c, s in zip(counts, sizes)]
    between = float(np.std(per, ddof=1) / math.sqrt(len(per))) if len(per) > 1 else math.nan
    return ViolationEstimate(x, p, math.sqrt(p * (1.0 - p) / n), n, per, between)


def _pooled_mean(groups) -> tuple[float, float]:
    n = sum(len(g) for g in groups)
    mean = sum(float(g.sum()) for g in groups) / n
    if len(groups) > 1:
        means = [float(g.mean()) for g in groups]
        return mean, float(np.std(means, ddof=1) / math.sqrt(len(means)))
    g = groups[0]
    return mean, float(g.std(ddof=1) / math.sqrt(len(g))) if len(g) > 1 else math.nan


def worker_count() -> int:
    """Worker cap from ``AOI_BOUND_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0")
    return n or (os.cpu_count() or 1)


def replication_seeds(base_seed: int, replications: int) -> list[int]:
    """Independent 64-bit seeds, one per replication index, from a spawn tree."""
    children = np.random.SeedSequence(base_seed).spawn(replications)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def draw_increments(model: QueueModel, n: int, rng: np.random.Generator):
    """Inter-arrival and service draws ``(Y_1..Y_n, Z_1..Z_n)`` in a fixed order."""
    Y = model.interarrival.sample_n(rng, n)
    Z = model.service.sample_n(rng, n)
    return Y, Z


@numba.njit(cache=True, nogil=True)
def lindley_waits(Y, Z):
    """``W_1 = 0``, ``W_k = max(0, W_{k-1} + Z_{k-1} - Y_k)``."""
    n = Y.shape[0]
    W = np.empty(n)
    if n == 0:
        return W
    W[0] = 0.0
    w = 0.0
    for k in range(1, n):
        w = w + Z[k - 1] - Y[k]
        if w < 0.0:
            w = 0.0
        W[k] = w
    return W


def _run_replication(model, cfg, seed, keep_raw):
    rng = np.random.default_rng(seed)
    Y, Z = draw_increments(model, cfg.num_packets, rng)
    W = lindley_waits(Y, Z)
    s = cfg.warmup_packets
    peaks = Y[s:] + W[s:] + Z[s:]
    raw = (Y[s:], Z[s:], W[s:]) if keep_raw else None
    return peaks, W[s:].copy(), raw


def _simulate(model: QueueModel, cfg: SimConfig, keep_raw: bool, backlog: bool) -> SimResult:
    seeds = replication_seeds(cfg.base_seed, cfg.replications)
    workers = min(worker_count(), cfg.replications)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outs = list(pool.map(lambda s: _run_replication(model, cfg, s, keep_raw), seeds))
    else:
        outs = [_run_replication(model, cfg, s, keep_raw) for s in seeds]
    return SimResult(
        model=model,
        config=cfg,
        peak_samples=[o[0] for o in outs],
        per_replication_seed=seeds,
        backlog_samples=[o[1] for o in outs] if backlog else None,
        raw=[o[2] for o in outs] if keep_raw else None,
    )


def simulate_peak_aoi(model: QueueModel, cfg: SimConfig = SimConfig(), keep_raw: bool = False) -> SimResult:
    """Peak-AoI samples ``P(k)`` for ``k > warmup_packets`` in every replication."""
    if model.rho > 1:
        raise UnstableModel(f"rho={model.rho} > 1")
    if model.rho == 1:
        warnings.warn("rho == 1: the queue is null-recurrent and never reaches stationarity")
    return _simulate(model, cfg, keep_raw, backlog=False)


def simulate_backlog(model: QueueModel, cfg: SimConfig = SimConfig(), keep_raw: bool = False) -> SimResult:
    """Also records the backlog term: sample ``k`` is ``W_k``, the ``B`` seen by packet ``k+1``."""
    model.require_strictly_stable()
    return _simulate(model, cfg, keep_raw, backlog=True)


def max_plus_reference(model: QueueModel, n_packets: int, rng: np.random.Generator) -> np.ndarray:
    """Peak AoI from the nested max-plus expression, with no recursion.

    ``P(k) = max(max(max_j sum_{n=j}^{k-2} (Z_n - Y_{n+1}), 0) + Z_{k-1}, Y_k) + Z_k``
    where an empty inner max is 0 and ``P(1) = Y_1 + Z_1``. Quadratic cost;
    consumes ``rng`` exactly like :func:`draw_increments`.
    """
    if n_packets > 10_000:
        raise ValueError("max_plus_reference is quadratic; use at most 10^4 packets")
    Y, Z = draw_increments(model, n_packets, rng)
    return max_plus_peaks(Y, Z)


def max_plus_peaks(Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    n = len(Y)
    P = np.empty(n)
    if n == 0:
        return P
    P[0] = Y[0] + Z[0]
    # incr[n-1] = Z_n - Y_{n+1} in 1-based terms
    incr = Z[:-1] - Y[1:]
    for k in range(2, n + 1):
        seg = incr[: k - 2]
        B = max(float(np.cumsum(seg[::-1]).max()), 0.0) if len(seg) else 0.0
        P[k - 1] = max(B + Z[k - 2], Y[k - 1]) + Z[k - 1]
    return P


RAW_HEADER = ("k", "interarrival", "service", "wait", "peak")


def export_raw(result: SimResult, directory) -> list[Path]:
    """Write ``replication_<i>.csv`` files with columns ``k,interarrival,service,wait,peak``."""
    if result.raw is None:
        raise ValueError("simulate with keep_raw=True to export raw samples")
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    first_k = result.config.warmup_packets + 1
    for i, (Y, Z, W) in enumerate(result.raw):
        path = out_dir / f"replication_{i:03d}.csv"
        P = Y + W + Z
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RAW_HEADER)
            for j in range(len(Y)):
                writer.writerow((first_k + j, _fmt(Y[j]), _fmt(Z[j]), _fmt(W[j]), _fmt(P[j])))
        paths.append(path)
    return paths


def _fmt(x) -> str:
    return format(float(x), ".17g")
