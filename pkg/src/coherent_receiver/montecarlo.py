"""Seeded Monte Carlo simulation of the feed-forward receiver.

Trials are grouped in fixed blocks of ``BLOCK_SIZE``. Block ``b`` draws from
a Philox stream keyed by ``(seed, b)``, so the random numbers of a trial
depend only on the seed and the trial index. Shards process whole blocks;
the shard count never changes the result.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .core import (
    BinaryEnsemble,
    DetectorModel,
    log_poisson_pmf,
    poisson_pmf,
    truncation_nmax,
)
from .errors import DomainError
from .feedforward import ChannelPlan, channel_means

BLOCK_SIZE = 1 << 16


class Method(str, enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "montecarlo"


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int = 0
    shards: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if self.shards < 1:
            raise DomainError("shards must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ErrorReport:
    error_rate: float
    std_error: float
    trials: int
    method: Method
    seed: int | None = None

    @classmethod
    def exact(cls, error_rate: float) -> "ErrorReport":
        return cls(error_rate, 0.0, 0, Method.EXACT, None)

    @classmethod
    def from_tally(cls, errors: int, trials: int, seed: int) -> "ErrorReport":
        rate = errors / trials
        return cls(rate, math.sqrt(rate * (1.0 - rate) / trials), trials,
                   Method.MONTE_CARLO, seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        return d


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one block of trials."""
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), block]))


def sample_outcome(mu: float, det: DetectorModel, rng: np.random.Generator, size=None):
    """Photon count for displaced amplitude ``mu``; on-off detectors clip at 1."""
    n = rng.poisson(det.effective_mean(mu), size=size)
    if not det.resolves_number:
        n = np.minimum(n, 1)
    elif det.n_max is not None:
        n = np.minimum(n, det.n_max)
    return n


def _inverse_cdf_table(mean: float, det: DetectorModel) -> np.ndarray:
    cutoff = det.n_max if det.n_max is not None else truncation_nmax(mean)
    cdf = np.cumsum(poisson_pmf(np.arange(cutoff + 1), mean))
    cdf[-1] = 1.0
    return cdf


def _draw_counts(u: np.ndarray, mean: float, det: DetectorModel,
                 table: np.ndarray | None) -> np.ndarray:
    if not det.resolves_number:
        return (u >= math.exp(-mean)).astype(np.int64)
    return np.searchsorted(table, u, side="right")


def simulate_block(plan: ChannelPlan, e: BinaryEnsemble, seed: int, block: int,
                   size: int, record: bool = False):
    """Run ``size`` trials of block ``block``; returns the error count.

    With ``record`` also returns the true hypotheses, the counts (trials x
    channels) and the decisions, for cross-checking against the scalar chain.
    """
    det = plan.detector
    rng = block_generator(seed, block)
    truth = np.where(rng.random(size) < e.p1, 1, 2)
    # uniforms are drawn for every trial and channel, consumed in a fixed order
    u = rng.random((plan.n_channels, size))
    far, near = channel_means(plan, e)
    pnr = det.resolves_number
    tables = [(_inverse_cdf_table(f, det), _inverse_cdf_table(n, det)) if pnr else (None, None)
              for f, n in zip(far, near)]

    logp1 = np.full(size, math.log(e.p1) if e.p1 > 0 else -np.inf)
    logp2 = np.full(size, math.log(e.p2) if e.p2 > 0 else -np.inf)
    counts = np.empty((size, plan.n_channels), dtype=np.int64) if record else None
    for k in range(plan.n_channels):
        null2 = logp1 <= logp2
        # the true state is nulled when it is the favoured hypothesis
        nulled = np.where(truth == 2, null2, ~null2)
        n = np.where(nulled,
                     _draw_counts(u[k], near[k], det, tables[k][1]),
                     _draw_counts(u[k], far[k], det, tables[k][0]))
        ll_far = _log_lik(n, far[k], det)
        ll_near = _log_lik(n, near[k], det)
        with np.errstate(invalid="ignore"):
            logp1 = logp1 + np.where(null2, ll_far, ll_near)
            logp2 = logp2 + np.where(null2, ll_near, ll_far)
        if record:
            counts[:, k] = n
    decision = np.where(logp1 > logp2, 1, 2)
    errors = int(np.count_nonzero(decision != truth))
    if record:
        return errors, truth, counts, decision
    return errors


def _log_lik(n: np.ndarray, mean: float, det: DetectorModel) -> np.ndarray:
    if det.resolves_number:
        return log_poisson_pmf(n, mean)
    on = -np.inf if mean == 0 else math.log(-math.expm1(-mean))
    return np.where(n > 0, on, -mean)


def simulate(plan: ChannelPlan, e: BinaryEnsemble, cfg: SimConfig) -> ErrorReport:
    """Estimate the receiver's error rate from ``cfg.trials`` random trials."""
    n_blocks = -(-cfg.trials // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, cfg.trials - b * BLOCK_SIZE) for b in range(n_blocks)]

    def run(b):
        return simulate_block(plan, e, cfg.seed, b, sizes[b])

    if cfg.shards == 1 or n_blocks == 1:
        errors = sum(run(b) for b in range(n_blocks))
    else:
        with ThreadPoolExecutor(max_workers=cfg.shards) as pool:
            errors = sum(pool.map(run, range(n_blocks)))
    return ErrorReport.from_tally(errors, cfg.trials, cfg.seed)
