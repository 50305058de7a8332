"""Coherent-state arithmetic, Poisson statistics and closed-form baselines.

Amplitudes are signed reals in sqrt(photon) units; the mean photon number of
``|a>`` is ``a**2``. The sign carries the binary phase.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

AMPLITUDE_LIMIT = 1e3


def _check_amplitude(value: float, name: str = "amplitude") -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if abs(value) > AMPLITUDE_LIMIT:
        raise DomainError(f"|{name}| must be <= {AMPLITUDE_LIMIT:g}, got {value!r}")
    return value


def _check_probability(p: float, name: str = "p1") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {p!r}")
    return p


@dataclass(frozen=True)
class BinaryEnsemble:
    """Two candidate coherent amplitudes and the prior of the first one."""

    alpha1: float
    alpha2: float
    p1: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "alpha1", _check_amplitude(self.alpha1, "alpha1"))
        object.__setattr__(self, "alpha2", _check_amplitude(self.alpha2, "alpha2"))
        object.__setattr__(self, "p1", _check_probability(self.p1))

    @classmethod
    def bpsk(cls, alpha: float, p1: float = 0.5) -> "BinaryEnsemble":
        """Phase-shift keyed pair ``{|alpha>, |-alpha>}``."""
        return cls(alpha, -alpha, p1)

    @classmethod
    def from_mean_photons(cls, m: float, p1: float = 0.5) -> "BinaryEnsemble":
        if m < 0:
            raise DomainError(f"mean photon number must be >= 0, got {m!r}")
        return cls.bpsk(math.sqrt(m), p1)

    @property
    def p2(self) -> float:
        return 1.0 - self.p1

    @property
    def separation(self) -> float:
        """Distance ``|alpha1 - alpha2|``; invariant under displacement."""
        return abs(self.alpha1 - self.alpha2)

    @property
    def m(self) -> float:
        """Mean photon number of the equivalent BPSK pair, ``(separation/2)**2``."""
        return (self.separation / 2.0) ** 2


class DetectorKind(enum.Enum):
    ON_OFF = "onoff"
    PNR = "pnr"


@dataclass(frozen=True)
class DetectorModel:
    """Detection semantics.

    ``n_max`` only matters for photon-number-resolving detectors; ``None``
    selects the truncation rule per mean. Efficiency and dark counts act on
    the displaced field: the count mean for amplitude ``mu`` is
    ``efficiency * mu**2 + dark_mean``.
    """

    kind: DetectorKind = DetectorKind.ON_OFF
    n_max: int | None = None
    efficiency: float = 1.0
    dark_mean: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, DetectorKind):
            object.__setattr__(self, "kind", DetectorKind(self.kind))
        if not (0.0 < self.efficiency <= 1.0):
            raise DomainError(f"efficiency must lie in (0, 1], got {self.efficiency!r}")
        if not (self.dark_mean >= 0.0 and math.isfinite(self.dark_mean)):
            raise DomainError(f"dark_mean must be >= 0, got {self.dark_mean!r}")
        if self.n_max is not None and self.n_max < 0:
            raise DomainError(f"n_max must be >= 0, got {self.n_max!r}")

    @classmethod
    def on_off(cls, efficiency: float = 1.0, dark_mean: float = 0.0) -> "DetectorModel":
        return cls(DetectorKind.ON_OFF, None, efficiency, dark_mean)

    @classmethod
    def pnr(cls, n_max: int | None = None, efficiency: float = 1.0,
            dark_mean: float = 0.0) -> "DetectorModel":
        return cls(DetectorKind.PNR, n_max, efficiency, dark_mean)

    @property
    def resolves_number(self) -> bool:
        return self.kind is DetectorKind.PNR

    def effective_mean(self, mu):
        return self.efficiency * np.square(mu) + self.dark_mean

    def cutoff(self, mean: float) -> int:
        """Largest count kept for a Poisson law of the given mean."""
        if self.n_max is not None:
            return self.n_max
        return truncation_nmax(mean)


IDEAL_ON_OFF = DetectorModel.on_off()
IDEAL_PNR = DetectorModel.pnr()


def truncation_nmax(mean: float) -> int:
    """Count cutoff leaving a Poisson tail below 1e-12 for means up to ~1e2."""
    if mean < 0:
        raise DomainError(f"Poisson mean must be >= 0, got {mean!r}")
    return int(math.ceil(mean + 12.0 * math.sqrt(mean) + 30.0))


def log_poisson_pmf(n, mean):
    """Natural log of the Poisson probability; ``-inf`` where it vanishes."""
    n = np.asarray(n)
    mean = np.asarray(mean, dtype=float)
    if np.any(n < 0):
        raise DomainError("photon count must be >= 0")
    if np.any(mean < 0):
        raise DomainError("Poisson mean must be >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = n * np.log(mean) - mean - gammaln(n + 1.0)
    # 0 * log(0) is taken as 0: the zero-mean law is a point mass at n=0
    out = np.where(mean == 0.0, np.where(n == 0, 0.0, -np.inf), out)
    return out[()] if out.ndim == 0 else out


def poisson_pmf(n, mean):
    """``mean**n * exp(-mean) / n!``, evaluated in log space."""
    return np.exp(log_poisson_pmf(n, mean))


def log_overlap(a1: float, a2: float) -> float:
    return -(_check_amplitude(a1) - _check_amplitude(a2)) ** 2


def overlap(a1: float, a2: float) -> float:
    """Squared inner product ``|<a1|a2>|**2 = exp(-(a1 - a2)**2)``."""
    return math.exp(log_overlap(a1, a2))


def displace(e: BinaryEnsemble, delta: float) -> BinaryEnsemble:
    delta = _check_amplitude(delta, "delta")
    return replace(e, alpha1=e.alpha1 + delta, alpha2=e.alpha2 + delta)


def helstrom_bound(e: BinaryEnsemble) -> float:
    """Minimum error probability for discriminating the two states.

    Uses the general two-state form ``(1 - sqrt(1 - 4 p1 p2 s)) / 2`` with
    ``s`` the overlap; for equal priors and ``|+-alpha>`` this is
    ``(1 - sqrt(1 - exp(-4 alpha**2))) / 2``.
    """
    s = overlap(e.alpha1, e.alpha2)
    x = 4.0 * e.p1 * e.p2 * s
    # 1 - sqrt(1 - x) == x / (1 + sqrt(1 - x)) without cancellation at small x
    return 0.5 * x / (1.0 + math.sqrt(max(0.0, 1.0 - x)))


def kennedy_error(m: float, p1: float) -> float:
    if m < 0:
        raise DomainError(f"mean photon number must be >= 0, got {m!r}")
    return _check_probability(p1) * math.exp(-4.0 * m)


def homodyne_error(m: float) -> float:
    """Shot-noise-limited homodyne error for equiprobable BPSK."""
    if m < 0:
        raise DomainError(f"mean photon number must be >= 0, got {m!r}")
    return 0.5 * math.erfc(math.sqrt(2.0 * m))
