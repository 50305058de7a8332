"""Derivative-free minimization: grid bracketing, golden section, simplex."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .errors import ContractError, DomainError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
PHI = 1.0 / INV_PHI


@dataclass(frozen=True)
class Bracket:
    """Three abscissae with the middle one below both ends.

    ``boundary`` is ``"lo"`` or ``"hi"`` when no interior minimum was found
    and the minimum sits at that end of the scanned interval; ``mid`` then
    equals that end and the bracketing property does not hold.
    """

    lo: float
    mid: float
    hi: float
    f_lo: float
    f_mid: float
    f_hi: float
    boundary: str | None = None

    def __post_init__(self):
        if self.boundary is None:
            if not (self.lo < self.mid < self.hi):
                raise ContractError(f"bracket not ordered: {self.lo}, {self.mid}, {self.hi}")
            if not (self.f_mid < self.f_lo and self.f_mid < self.f_hi):
                raise ContractError("f(mid) must be below f(lo) and f(hi)")
        elif self.boundary not in ("lo", "hi"):
            raise ContractError(f"unknown boundary flag {self.boundary!r}")

    @classmethod
    def from_function(cls, f: Callable[[float], float], lo: float, mid: float,
                      hi: float) -> "Bracket":
        return cls(lo, mid, hi, f(lo), f(mid), f(hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo


def first_local_min_scan(f: Callable[[float], float], lo: float, hi: float,
                         grid_points: int) -> Bracket:
    """Bracket the first local minimum of ``f`` met scanning up from ``lo``.

    Runs of equal values are treated as a single grid point, so flat
    stretches do not register as minima.
    """
    if grid_points < 3:
        raise DomainError("grid_points must be >= 3")
    if not lo < hi:
        raise DomainError("need lo < hi")
    xs = np.linspace(lo, hi, grid_points)
    fs = np.array([f(x) for x in xs], dtype=float)
    return bracket_from_grid(xs, fs)


def bracket_from_grid(xs, fs) -> Bracket:
    n = len(xs)
    if fs[1] >= fs[0]:
        j = 1
        while j < n and fs[j] == fs[0]:
            j += 1
        if j == n or fs[j] > fs[0]:
            return Bracket(xs[0], xs[0], xs[1], fs[0], fs[0], fs[1], boundary="lo")
    for i in range(1, n - 1):
        if not fs[i] < fs[i - 1]:
            continue
        j = i + 1
        while j < n and fs[j] == fs[i]:
            j += 1
        if j < n and fs[j] > fs[i]:
            return Bracket(xs[i - 1], xs[i], xs[j], fs[i - 1], fs[i], fs[j])
    return Bracket(xs[-2], xs[-1], xs[-1], fs[-2], fs[-1], fs[-1], boundary="hi")


def golden_budget(width: float, tol: float) -> int:
    """Maximum number of evaluations :func:`golden_section` spends."""
    return math.ceil(math.log(width / tol) / math.log(PHI)) + 2


def golden_section(f: Callable[[float], float], b: Bracket,
                   tol: float = 1e-8) -> tuple[float, float]:
    """Shrink ``[b.lo, b.hi]`` by the golden ratio until narrower than ``tol``.

    Returns the best interior point and its value. Boundary brackets are
    searched the same way over their interval.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    a, c = float(b.lo), float(b.hi)
    if not a < c:
        raise ContractError("bracket has zero width")
    x1 = c - INV_PHI * (c - a)
    x2 = a + INV_PHI * (c - a)
    f1, f2 = f(x1), f(x2)
    while c - a > tol:
        if f1 <= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - INV_PHI * (c - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (c - a)
            f2 = f(x2)
    if f1 <= f2:
        return x1, f1
    return x2, f2


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    fun: float
    nfev: int
    converged: bool


def simplex_minimize(f: Callable[[np.ndarray], float], x0, tol: float = 1e-8,
                     max_iter: int = 20000, ftol: float = 1e-12) -> SimplexResult:
    """Nelder-Mead with one restart from the best point found.

    ``tol`` bounds the final simplex diameter and ``ftol`` the spread of
    objective values. ``converged`` is False when the iteration cap hit.
    The returned value never exceeds ``f(x0)``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size > 32:
        raise DomainError("simplex_minimize supports at most 32 dimensions")
    f0 = float(f(x0))
    if not math.isfinite(f0):
        raise DomainError("objective is not finite at x0")
    options = {"xatol": tol, "fatol": ftol, "maxiter": max_iter,
               "maxfev": 4 * max_iter, "adaptive": x0.size > 4}
    best_x, best_f, nfev, converged = x0, f0, 1, True
    start = x0
    for _ in range(2):
        res = minimize(f, start, method="Nelder-Mead", options=options)
        nfev += res.nfev
        converged = bool(res.success)
        if res.fun < best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
        start = best_x
    return SimplexResult(best_x, best_f, nfev, converged)
