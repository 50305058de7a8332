"""Multichannel feed-forward displacement receiver.

The signal is split into N channels. Channel k is displaced to null the
hypothesis currently favoured by the posterior (up to an increment
``beta[k]``), counted, and the count updates the posterior that sets the
next channel's displacement. The final decision is the MAP hypothesis.

Hypotheses are labelled 1 (``alpha1``) and 2 (``alpha2``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import IDEAL_ON_OFF, BinaryEnsemble, DetectorModel, log_poisson_pmf
from .errors import (
    BudgetExceededError,
    ContractError,
    DegenerateEvidenceError,
    DomainError,
    OptimizerError,
)
from .optimizer import first_local_min_scan, golden_section, simplex_minimize
from .single_channel import (
    DisplacedPair,
    beta_scan_range,
    nulling_displacement,
    optimize_beta,
)

log = logging.getLogger(__name__)

ON_OFF_MAX_CHANNELS = 24
PNR_MAX_BRANCHES = 10**7


@dataclass(frozen=True)
class ChannelPlan:
    """Energy split and displacement increments for each channel.

    Channel k carries amplitude ``alpha * sqrt(energy_fractions[k])`` and
    ``beta_schedule[k]`` is its increment in the same (per-channel) units.
    """

    energy_fractions: tuple[float, ...]
    beta_schedule: tuple[float, ...]
    detector: DetectorModel = IDEAL_ON_OFF

    def __post_init__(self):
        fr = tuple(float(f) for f in self.energy_fractions)
        betas = tuple(float(b) for b in self.beta_schedule)
        object.__setattr__(self, "energy_fractions", fr)
        object.__setattr__(self, "beta_schedule", betas)
        if not fr:
            raise DomainError("a plan needs at least one channel")
        if len(fr) != len(betas):
            raise ContractError("energy_fractions and beta_schedule differ in length")
        if any(f < 0 for f in fr) or abs(math.fsum(fr) - 1.0) > 1e-12:
            raise DomainError("energy fractions must be nonnegative and sum to 1")
        if any(b < 0 or not math.isfinite(b) for b in betas):
            raise DomainError("displacement increments must be finite and >= 0")

    @classmethod
    def homogeneous(cls, betas, detector: DetectorModel = IDEAL_ON_OFF) -> "ChannelPlan":
        n = len(betas)
        return cls((1.0 / n,) * n, tuple(betas), detector)

    @property
    def n_channels(self) -> int:
        return len(self.energy_fractions)

    @property
    def kappas(self) -> np.ndarray:
        """Normalized channel positions: midpoints of the cumulative energy."""
        fr = np.asarray(self.energy_fractions)
        return np.cumsum(fr) - fr / 2.0

    def to_dict(self) -> dict:
        d = self.detector
        return {
            "energy_fractions": list(self.energy_fractions),
            "beta_schedule": list(self.beta_schedule),
            "detector": {"kind": d.kind.value, "n_max": d.n_max,
                         "efficiency": d.efficiency, "dark_mean": d.dark_mean},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelPlan":
        det = DetectorModel(**data.get("detector", {}))
        betas = data["beta_schedule"]
        fractions = data.get("energy_fractions") or [1.0 / len(betas)] * len(betas)
        return cls(tuple(fractions), tuple(betas), det)


@dataclass(frozen=True)
class FeedForwardState:
    posterior_p1: float
    channel_index: int
    on_count: int = 0
    outcome_trace: tuple[int, ...] = field(default_factory=tuple)


def beta_schedule_asymptotic(m: float, kappa: float) -> float:
    """Optimal increment at normalized position ``kappa`` for many channels.

    ``sqrt(m) * (1 - s) / s`` with ``s = sqrt(1 - exp(-4 m kappa))``. The
    value is a density: a channel holding energy fraction ``f`` uses
    ``sqrt(f)`` times it, the same scaling as the channel amplitude.
    """
    if m <= 0:
        raise DomainError(f"mean photon number must be > 0, got {m!r}")
    if kappa <= 0:
        raise DomainError(f"kappa must be > 0 (schedule diverges at 0), got {kappa!r}")
    s = math.sqrt(-math.expm1(-4.0 * m * kappa))
    return math.sqrt(m) * (1.0 - s) / s


def asymptotic_plan(n_channels: int, m: float,
                    detector: DetectorModel = IDEAL_ON_OFF) -> ChannelPlan:
    """Homogeneous plan with the asymptotic schedule at channel midpoints."""
    if n_channels < 1:
        raise DomainError("n_channels must be >= 1")
    scale = math.sqrt(1.0 / n_channels)
    betas = [scale * beta_schedule_asymptotic(m, (k + 0.5) / n_channels)
             for k in range(n_channels)]
    return ChannelPlan.homogeneous(betas, detector)


def parity_decision(on_count: int) -> int:
    """Odd number of clicks -> hypothesis 1, even -> hypothesis 2."""
    return 1 if on_count % 2 else 2


def map_decision(p1: float) -> int:
    return 1 if p1 > 0.5 else 2


def log_likelihood(outcome: int, mean: float, det: DetectorModel) -> float:
    if outcome < 0:
        raise DomainError(f"photon count must be >= 0, got {outcome!r}")
    if det.resolves_number:
        if det.n_max is not None and outcome > det.n_max:
            raise DomainError(f"count {outcome} beyond detector range n_max={det.n_max}")
        return float(log_poisson_pmf(outcome, mean))
    if outcome == 0:
        return -mean
    if mean == 0.0:
        return -math.inf
    return math.log(-math.expm1(-mean))


def bayes_update(p1: float, outcome: int, mu1: float, mu2: float,
                 det: DetectorModel = IDEAL_ON_OFF) -> float:
    """Posterior of hypothesis 1 after observing ``outcome``.

    ``mu1`` and ``mu2`` are the displaced amplitudes reaching the detector.
    The posterior of hypothesis 2 is ``1 - result``.
    """
    if not 0.0 <= p1 <= 1.0:
        raise DomainError(f"prior must lie in [0, 1], got {p1!r}")
    if mu1 == mu2:
        return p1
    with np.errstate(divide="ignore"):
        l1 = math.log(p1) if p1 > 0 else -math.inf
        l2 = math.log(1.0 - p1) if p1 < 1 else -math.inf
    l1 += log_likelihood(outcome, float(det.effective_mean(mu1)), det)
    l2 += log_likelihood(outcome, float(det.effective_mean(mu2)), det)
    if l1 == -math.inf and l2 == -math.inf:
        raise DegenerateEvidenceError(
            f"outcome {outcome} is impossible under both hypotheses")
    if l2 == -math.inf:
        return 1.0
    if l1 == -math.inf:
        return 0.0
    return float(expit(l1 - l2))


def channel_pair(plan: ChannelPlan, e: BinaryEnsemble, k: int, p1: float) -> DisplacedPair:
    """Displaced amplitudes in channel ``k`` given the current posterior."""
    scale = math.sqrt(plan.energy_fractions[k])
    a1, a2 = e.alpha1 * scale, e.alpha2 * scale
    beta = plan.beta_schedule[k]
    delta = nulling_displacement(a1, a2, p1, beta)
    return DisplacedPair(a1 + delta, a2 + delta, p1, beta)


def run_chain(plan: ChannelPlan, e: BinaryEnsemble,
              outcomes) -> tuple[int, list[FeedForwardState]]:
    """Feed the recorded counts through the receiver.

    Returns the final MAP decision and the state before the first channel
    and after every channel.
    """
    outcomes = [int(n) for n in outcomes]
    if len(outcomes) != plan.n_channels:
        raise ContractError(
            f"expected {plan.n_channels} outcomes, got {len(outcomes)}")
    state = FeedForwardState(e.p1, 0)
    trace = [state]
    for k, n in enumerate(outcomes):
        pair = channel_pair(plan, e, k, state.posterior_p1)
        post = bayes_update(state.posterior_p1, n, pair.mu1, pair.mu2, plan.detector)
        state = FeedForwardState(post, k + 1, state.on_count + (n > 0),
                                 state.outcome_trace + (n,))
        trace.append(state)
    return map_decision(state.posterior_p1), trace


def channel_means(plan: ChannelPlan, e: BinaryEnsemble) -> tuple[np.ndarray, np.ndarray]:
    """Count means per channel for the non-nulled and the nulled hypothesis."""
    return _channel_means(np.asarray(plan.energy_fractions),
                          np.asarray(plan.beta_schedule), e.separation, plan.detector)


def _channel_means(fractions, betas, separation, det):
    far = det.effective_mean(separation * np.sqrt(fractions) + betas)
    near = det.effective_mean(betas)
    return np.asarray(far, dtype=float), np.asarray(near, dtype=float)


def _outcome_likelihoods(mean_far: float, mean_near: float, det: DetectorModel):
    """Likelihood rows ``(far, near)`` over the detector's outcome alphabet."""
    if det.resolves_number:
        n = np.arange(det.cutoff(max(mean_far, mean_near)) + 1)
        return np.exp(log_poisson_pmf(n, mean_far)), np.exp(log_poisson_pmf(n, mean_near))
    far = np.array([math.exp(-mean_far), -math.expm1(-mean_far)])
    near = np.array([math.exp(-mean_near), -math.expm1(-mean_near)])
    return far, near


@dataclass(frozen=True)
class OutcomeTree:
    """Every outcome sequence with its probability under each hypothesis.

    Leaves are in lexicographic order of the count sequence; ``shape`` gives
    the number of outcomes per channel (2 for on-off, cutoff + 1 for PNR).
    """

    w1: np.ndarray
    w2: np.ndarray
    p1: float
    shape: tuple[int, ...]

    @property
    def joint1(self) -> np.ndarray:
        return self.p1 * self.w1

    @property
    def joint2(self) -> np.ndarray:
        return (1.0 - self.p1) * self.w2

    @property
    def decisions(self) -> np.ndarray:
        return np.where(self.joint1 > self.joint2, 1, 2)

    @property
    def truncated_mass(self) -> float:
        return max(0.0, 1.0 - math.fsum(self.w1), 1.0 - math.fsum(self.w2))

    def sequences(self) -> np.ndarray:
        """Count sequence of each leaf, shape ``(leaves, N)``."""
        idx = np.unravel_index(np.arange(self.w1.size), self.shape)
        return np.stack(idx, axis=1)

    def error(self) -> float:
        return math.fsum(np.minimum(self.joint1, self.joint2))


def branch_count(plan: ChannelPlan, e: BinaryEnsemble) -> int:
    det = plan.detector
    if not det.resolves_number:
        return 2 ** plan.n_channels
    far, near = channel_means(plan, e)
    return math.prod(det.cutoff(max(f, n)) + 1 for f, n in zip(far, near))


def _check_budget(plan: ChannelPlan, e: BinaryEnsemble) -> None:
    if not plan.detector.resolves_number:
        if plan.n_channels > ON_OFF_MAX_CHANNELS:
            raise BudgetExceededError(
                f"{plan.n_channels} on-off channels exceed the exact limit of "
                f"{ON_OFF_MAX_CHANNELS}; use Monte Carlo simulation")
        return
    branches = branch_count(plan, e)
    if branches > PNR_MAX_BRANCHES:
        raise BudgetExceededError(
            f"{branches} PNR outcome sequences exceed {PNR_MAX_BRANCHES}; "
            "use Monte Carlo simulation")


def _enumerate(fractions, betas, e: BinaryEnsemble, det: DetectorModel):
    far, near = _channel_means(fractions, betas, e.separation, det)
    p1 = e.p1
    w1 = np.ones(1)
    w2 = np.ones(1)
    shape = []
    for k in range(len(betas)):
        lik_far, lik_near = _outcome_likelihoods(far[k], near[k], det)
        shape.append(lik_far.size)
        j1, j2 = p1 * w1, (1.0 - p1) * w2
        # posterior p1 <= 1/2 (j1 <= j2) nulls hypothesis 2
        null2 = (j1 <= j2)[:, None]
        w1 = (w1[:, None] * np.where(null2, lik_far, lik_near)).ravel()
        w2 = (w2[:, None] * np.where(null2, lik_near, lik_far)).ravel()
    return w1, w2, tuple(shape)


def outcome_tree(plan: ChannelPlan, e: BinaryEnsemble) -> OutcomeTree:
    _check_budget(plan, e)
    w1, w2, shape = _enumerate(np.asarray(plan.energy_fractions),
                               np.asarray(plan.beta_schedule), e, plan.detector)
    return OutcomeTree(w1, w2, e.p1, shape)


def exact_error(plan: ChannelPlan, e: BinaryEnsemble) -> float:
    """Average MAP error of the plan by full enumeration of outcome sequences."""
    return outcome_tree(plan, e).error()


def _tree_error(fractions, betas, e, det) -> float:
    w1, w2, _ = _enumerate(fractions, betas, e, det)
    return math.fsum(np.minimum(e.p1 * w1, (1.0 - e.p1) * w2))


def _softmax(z):
    z = np.concatenate([z, [0.0]])
    z = np.exp(z - z.max())
    return z / z.sum()


def _decode(x, n, homogeneous):
    betas = np.square(x[:n])
    if homogeneous or n == 1:
        fractions = np.full(n, 1.0 / n)
    else:
        fractions = _softmax(x[n:])
    return fractions, betas


def _encode(plan: ChannelPlan, homogeneous: bool) -> np.ndarray:
    u = np.sqrt(np.asarray(plan.beta_schedule))
    if homogeneous or plan.n_channels == 1:
        return u
    fr = np.maximum(np.asarray(plan.energy_fractions), 1e-300)
    return np.concatenate([u, np.log(fr[:-1] / fr[-1])])


def _extend(plan: ChannelPlan, tiny: float = 1e-12) -> ChannelPlan:
    """Append a near-empty channel so an N-1 plan seeds an N-channel search."""
    fr = [f * (1.0 - tiny) for f in plan.energy_fractions] + [tiny]
    fr[-1] = 1.0 - math.fsum(fr[:-1])
    return ChannelPlan(tuple(fr), plan.beta_schedule + (0.0,), plan.detector)


def _optimize_single(e, det, tol):
    plan_of = lambda b: ChannelPlan((1.0,), (max(b, 0.0),), det)
    f = lambda b: exact_error(plan_of(b), e)
    lo, hi = beta_scan_range(e.m)
    bracket = first_local_min_scan(f, lo, hi, 2000)
    if bracket.boundary == "hi":
        raise OptimizerError("single-channel error still decreasing at scan edge",
                             best=plan_of(bracket.mid))
    beta, eps = golden_section(f, bracket, tol)
    if bracket.boundary == "lo" and bracket.f_lo <= eps:
        beta, eps = bracket.lo, bracket.f_lo
    return plan_of(beta), eps


def optimize_plan(n_channels: int, e: BinaryEnsemble, homogeneous: bool = False,
                  detector: DetectorModel = IDEAL_ON_OFF,
                  warm_start: ChannelPlan | None = None,
                  ftol: float = 1e-9) -> tuple[ChannelPlan, float]:
    """Minimize the exact error over increments and (optionally) the split.

    Increments are searched as ``beta = u**2`` and energy fractions through
    a softmax of ``N - 1`` free logits, so the search is unconstrained.
    Without ``warm_start`` an inhomogeneous search first optimizes the
    ``N - 1`` channel plan and extends it by an empty channel, so the result
    never exceeds the ``N - 1`` optimum.
    """
    if n_channels < 1:
        raise DomainError("n_channels must be >= 1")
    if e.m <= 0:
        raise DomainError("optimize_plan needs a positive mean photon number")
    if n_channels == 1:
        return _optimize_single(e, detector, tol=1e-10)

    probe = ChannelPlan.homogeneous([0.0] * n_channels, detector)
    _check_budget(probe, e)

    if warm_start is None and not homogeneous:
        warm_start, _ = optimize_plan(n_channels - 1, e, False, detector, ftol=ftol)

    starts = [asymptotic_plan(n_channels, e.m, detector)]
    beta1, _ = optimize_beta(e, "pnr" if detector.resolves_number else "onoff", detector)
    starts.append(ChannelPlan.homogeneous([beta1 / math.sqrt(n_channels)] * n_channels,
                                          detector))
    if warm_start is not None and not homogeneous:
        if warm_start.n_channels == n_channels - 1:
            warm_start = _extend(warm_start)
        if warm_start.n_channels != n_channels:
            raise ContractError("warm_start must have N or N-1 channels")
        starts.append(ChannelPlan(warm_start.energy_fractions,
                                  warm_start.beta_schedule, detector))

    def objective(x):
        fractions, betas = _decode(x, n_channels, homogeneous)
        return _tree_error(fractions, betas, e, detector)

    # every start is refined; the near-empty channel of an extended warm
    # start rarely revives, so it mainly guards monotonicity in N
    best = None
    for p in starts:
        res = simplex_minimize(objective, _encode(p, homogeneous), tol=1e-7,
                               ftol=ftol, max_iter=4000 * n_channels)
        if not res.converged:
            log.warning("simplex hit its iteration cap for N=%d (eps=%.6g)",
                        n_channels, res.fun)
        if best is None or res.fun < best.fun:
            best = res
    fractions, betas = _decode(best.x, n_channels, homogeneous)
    fractions = tuple(fractions[:-1]) + (1.0 - math.fsum(fractions[:-1]),)
    plan = ChannelPlan(fractions, tuple(betas), detector)
    return plan, exact_error(plan, e)


def optimize_sequence(ns, e: BinaryEnsemble, homogeneous: bool = False,
                      detector: DetectorModel = IDEAL_ON_OFF) -> dict[int, tuple[ChannelPlan, float]]:
    """Optimize every N up to ``max(ns)``, warm-starting each from N-1."""
    wanted = sorted(set(int(n) for n in ns))
    out = {}
    prev = None
    for n in range(1, wanted[-1] + 1):
        plan, eps = optimize_plan(n, e, homogeneous, detector,
                                  warm_start=prev if not homogeneous else None)
        prev = plan
        if n in wanted:
            out[n] = (plan, eps)
    return out
