"""Single-channel displacement receiver.

The signal is displaced so the more probable state is nulled up to an
increment ``beta >= 0``, then counted. Decisions follow the maximum
posterior rule, either on the full photon count or on click/no-click.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincc

from .core import (
    IDEAL_ON_OFF,
    IDEAL_PNR,
    BinaryEnsemble,
    DetectorModel,
    displace,
    log_poisson_pmf,
)
from .errors import ContractError, DomainError, NoThresholdError, OptimizerError
from .optimizer import first_local_min_scan, golden_section


class Strategy(enum.Enum):
    ON_OFF = "onoff"
    PNR = "pnr"


@dataclass(frozen=True)
class DisplacedPair:
    """Displaced amplitudes under each hypothesis, with the prior of hypothesis 1."""

    mu1: float
    mu2: float
    p1: float
    beta: float = 0.0

    @property
    def p2(self) -> float:
        return 1.0 - self.p1


@dataclass(frozen=True)
class ThresholdRule:
    """Counts ``n >= n_star`` go to ``assign_high`` (the larger-mean hypothesis)."""

    n_star: int
    assign_high: int

    @property
    def assign_low(self) -> int:
        return 3 - self.assign_high

    def decide(self, n: int) -> int:
        return self.assign_high if n >= self.n_star else self.assign_low


def nulling_displacement(alpha1: float, alpha2: float, p1: float, beta: float) -> float:
    """Displacement that nulls the more probable state up to ``beta``.

    Ties (``p1 == p2``) null hypothesis 2. The increment points away from
    the other state so the two displaced magnitudes are ``beta`` and
    ``|alpha1 - alpha2| + beta``.
    """
    s = 1.0 if alpha1 >= alpha2 else -1.0
    if p1 <= 1.0 - p1:
        return -alpha2 + s * beta
    return -alpha1 - s * beta


def build_displaced(e: BinaryEnsemble, beta: float) -> DisplacedPair:
    if beta < 0:
        raise DomainError(f"displacement increment must be >= 0, got {beta!r}")
    d = displace(e, nulling_displacement(e.alpha1, e.alpha2, e.p1, beta))
    return DisplacedPair(d.alpha1, d.alpha2, e.p1, beta)


def error_onoff(alpha: float, beta: float, p1: float) -> float:
    """Closed-form on-off error ``p1 exp(-(2a+b)**2) + p2 (1 - exp(-b**2))``."""
    if alpha < 0 or beta < 0:
        raise DomainError("alpha and beta must be >= 0")
    return p1 * math.exp(-(2.0 * alpha + beta) ** 2) - (1.0 - p1) * math.expm1(-beta * beta)


def _hi_lo(d: DisplacedPair, det: DetectorModel):
    """(index, prior, count mean) of the larger-mean then smaller-mean hypothesis."""
    m1 = float(det.effective_mean(d.mu1))
    m2 = float(det.effective_mean(d.mu2))
    if m1 >= m2:
        return (1, d.p1, m1), (2, d.p2, m2)
    return (2, d.p2, m2), (1, d.p1, m1)


def error_with_threshold(d: DisplacedPair, n_star: int,
                         det: DetectorModel = IDEAL_PNR) -> float:
    """Error of the fixed rule that sends ``n >= n_star`` to the larger mean."""
    (_, p_hi, m_hi), (_, p_lo, m_lo) = _hi_lo(d, det)
    if n_star <= 0:
        return p_lo
    # P(N <= k) = Q(k+1, mean) and P(N > k) = P(k+1, mean)
    k = n_star - 1
    if k == 0:
        miss, false_alarm = math.exp(-m_hi), -math.expm1(-m_lo)
    else:
        miss, false_alarm = float(gammaincc(k + 1, m_hi)), float(gammainc(k + 1, m_lo))
    return p_hi * miss + p_lo * false_alarm


def error_map_pnr(d: DisplacedPair, det: DetectorModel = IDEAL_PNR,
                  threshold: int | None = None) -> float:
    """Average MAP error with photon-number resolution.

    Computed as ``sum_n min_i p_i P(n | i)`` over counts up to the cutoff,
    which equals ``1 - sum_n max_i p_i P(n | i)`` but keeps full relative
    precision when the error is small. Passing ``threshold`` forces that
    count threshold instead of the MAP rule.
    """
    if not det.resolves_number:
        raise ContractError("error_map_pnr needs a photon-number-resolving detector")
    if threshold is not None:
        return error_with_threshold(d, threshold, det)
    m1 = float(det.effective_mean(d.mu1))
    m2 = float(det.effective_mean(d.mu2))
    n = np.arange(det.cutoff(max(m1, m2)) + 1)
    with np.errstate(divide="ignore"):
        w1 = np.exp(np.log(d.p1) + log_poisson_pmf(n, m1))
        w2 = np.exp(np.log(d.p2) + log_poisson_pmf(n, m2))
    return math.fsum(np.minimum(w1, w2))


def error_onoff_pair(d: DisplacedPair, det: DetectorModel = IDEAL_ON_OFF) -> float:
    """MAP error when only click/no-click is observed."""
    m1 = float(det.effective_mean(d.mu1))
    m2 = float(det.effective_mean(d.mu2))
    off1, off2 = math.exp(-m1), math.exp(-m2)
    on1, on2 = -math.expm1(-m1), -math.expm1(-m2)
    return min(d.p1 * off1, d.p2 * off2) + min(d.p1 * on1, d.p2 * on2)


def discrimination_threshold(d: DisplacedPair,
                             det: DetectorModel = IDEAL_PNR) -> ThresholdRule:
    """Smallest count at which the larger-mean hypothesis wins the MAP test.

    The weighted likelihood ratio ``p_hi P(n|hi) / (p_lo P(n|lo))`` grows
    geometrically in ``n``, so the crossing is unique. Ties go to the
    smaller-mean hypothesis.
    """
    (i_hi, p_hi, m_hi), (_, p_lo, m_lo) = _hi_lo(d, det)
    if m_hi == m_lo:
        raise NoThresholdError("equal count means: likelihood ratio is flat in n")
    if p_lo == 0.0:
        return ThresholdRule(0, i_hi)
    if p_hi == 0.0:
        raise NoThresholdError("larger-mean hypothesis has zero prior")
    # log ratio(n) = n*c - g, with c > 0
    g = (m_hi - m_lo) - math.log(p_hi / p_lo)
    if m_lo == 0.0:
        return ThresholdRule(0 if g < 0 else 1, i_hi)
    c = math.log(m_hi / m_lo)
    if g < 0:
        return ThresholdRule(0, i_hi)
    return ThresholdRule(int(math.floor(g / c)) + 1, i_hi)


def error_curve(e: BinaryEnsemble, strategy: Strategy, det: DetectorModel | None = None):
    """Return ``beta -> error`` for the given strategy."""
    strategy = Strategy(strategy)
    if strategy is Strategy.ON_OFF:
        det = det or IDEAL_ON_OFF
        return lambda beta: error_onoff_pair(build_displaced(e, max(beta, 0.0)), det)
    det = det or IDEAL_PNR
    return lambda beta: error_map_pnr(build_displaced(e, max(beta, 0.0)), det)


def beta_scan_range(m: float) -> tuple[float, float]:
    return 0.0, max(3.0, 4.0 * math.sqrt(m))


def optimize_beta(e: BinaryEnsemble, strategy: Strategy = Strategy.ON_OFF,
                  det: DetectorModel | None = None, grid_points: int = 2000,
                  tol: float = 1e-8) -> tuple[float, float]:
    """First local minimum of the error over ``beta >= 0``: ``(beta_opt, eps)``."""
    m = e.m
    if m <= 0:
        raise DomainError("optimize_beta needs a positive mean photon number")
    f = error_curve(e, strategy, det)
    lo, hi = beta_scan_range(m)
    bracket = first_local_min_scan(f, lo, hi, grid_points)
    if bracket.boundary == "hi":
        raise OptimizerError(
            f"error still decreasing at beta={hi:g}; no minimum in [{lo:g}, {hi:g}]",
            best=bracket,
        )
    beta, eps = golden_section(f, bracket, tol)
    if bracket.boundary == "lo" and bracket.f_lo <= eps:
        beta, eps = bracket.lo, bracket.f_lo
    return beta, eps
