"""Discrimination of binary coherent optical signals.

Analytic baselines (Helstrom, Kennedy, homodyne), the single-channel
displacement receiver, the multichannel feed-forward receiver with exact
outcome-tree evaluation, Monte Carlo simulation and schedule optimization.
"""

from .core import (
    IDEAL_ON_OFF,
    IDEAL_PNR,
    BinaryEnsemble,
    DetectorKind,
    DetectorModel,
    displace,
    helstrom_bound,
    homodyne_error,
    kennedy_error,
    log_overlap,
    log_poisson_pmf,
    overlap,
    poisson_pmf,
    truncation_nmax,
)
from .single_channel import (
    DisplacedPair,
    Strategy,
    ThresholdRule,
    build_displaced,
    discrimination_threshold,
    error_curve,
    error_map_pnr,
    error_onoff,
    optimize_beta,
)
from .feedforward import (
    ChannelPlan,
    FeedForwardState,
    asymptotic_plan,
    bayes_update,
    beta_schedule_asymptotic,
    exact_error,
    optimize_plan,
    optimize_sequence,
    parity_decision,
    run_chain,
)
from .montecarlo import ErrorReport, SimConfig, sample_outcome, simulate

__version__ = "0.1.0"

__all__ = [
    "IDEAL_ON_OFF",
    "IDEAL_PNR",
    "BinaryEnsemble",
    "ChannelPlan",
    "DetectorKind",
    "DetectorModel",
    "DisplacedPair",
    "ErrorReport",
    "FeedForwardState",
    "SimConfig",
    "Strategy",
    "ThresholdRule",
    "asymptotic_plan",
    "bayes_update",
    "beta_schedule_asymptotic",
    "build_displaced",
    "discrimination_threshold",
    "displace",
    "error_curve",
    "error_map_pnr",
    "error_onoff",
    "exact_error",
    "helstrom_bound",
    "homodyne_error",
    "kennedy_error",
    "log_overlap",
    "log_poisson_pmf",
    "optimize_beta",
    "optimize_plan",
    "optimize_sequence",
    "overlap",
    "parity_decision",
    "poisson_pmf",
    "run_chain",
    "sample_outcome",
    "simulate",
    "truncation_nmax",
]
