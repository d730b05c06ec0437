"""Truncated series estimation and its exact worst-case risk.

The estimator keeps the first D noisy coefficients and zeroes the rest.
Its worst-case squared risk over the ellipsoid has the closed form

    Q^2 / a_{D+1}^2  +  sigma^2 * sum_{j<=D} 1/s_j^2

(squared bias plus accumulated noise variance), attained at the spike
element with theta_{D+1} = Q/a_{D+1}.  All sums run in ascending index
order through math.fsum so results are exactly rounded and reproducible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .problem import (
    SaturationWarning,
    SequenceProblem,
    SingularSpectrum,
    ValidationError,
    ensure_usable,
)

__all__ = [
    "RiskDecomposition",
    "Element",
    "Observations",
    "rho_squared",
    "truncation_risk",
    "optimal_truncation",
    "least_favorable",
    "subset_truncation_risk",
    "estimate",
]


@dataclass(frozen=True)
class RiskDecomposition:
    """Exact worst-case risk of truncation at ``level`` coefficients."""

    level: int
    bias_sq: float
    variance: float
    total: float

    @property
    def rmse(self) -> float:
        return math.sqrt(self.total)


@dataclass(frozen=True, eq=False)
class Element:
    """A coefficient vector theta_1..theta_N."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.coeffs, dtype=np.float64, copy=True)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("element coefficients must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    def __len__(self) -> int:
        return self.coeffs.size


@dataclass(frozen=True, eq=False)
class Observations:
    """Observed noisy coefficients z_1..z_N with provenance."""

    values: np.ndarray
    provenance: str = "external"
    seed: tuple | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("observations must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size


def rho_squared(spectrum: SingularSpectrum, n: int) -> float:
    """Accumulated noise amplification sum_{j=1..n} 1/s_j^2 (0 for n = 0)."""
    if not 0 <= n <= spectrum.n_max:
        raise ValidationError(f"n = {n} out of range 0..{spectrum.n_max}")
    s = spectrum.values
    return math.fsum(1.0 / s[j] ** 2 for j in range(n))


def truncation_risk(problem: SequenceProblem, D: int) -> RiskDecomposition:
    """Exact worst-case squared risk of truncating at level D (0 <= D <= N-1)."""
    n = problem.n
    if not 0 <= D <= n - 1:
        raise ValidationError(
            f"level D = {D} out of range 0..{n - 1} (a_(D+1) must exist)")
    a = problem.ellipsoid.weights
    q = problem.ellipsoid.radius
    bias_sq = q ** 2 / a[D] ** 2
    variance = problem.sigma ** 2 * rho_squared(problem.spectrum, D)
    return RiskDecomposition(D, bias_sq, variance, bias_sq + variance)


def optimal_truncation(problem: SequenceProblem) -> tuple[int, float]:
    """Best truncation level and the resulting error bound (RMS units).

    Scans D = 0..N-1 for the smallest total risk, breaking ties toward the
    smaller level, and stops early once the variance term alone exceeds the
    incumbent (the variance is non-decreasing in D).  Warns when the best
    level sits at the end of the finite range, which signals that N is too
    small to trust the minimum.
    """
    ensure_usable(problem)
    n = problem.n
    a = problem.ellipsoid.weights
    s = problem.spectrum.values
    q2 = problem.ellipsoid.radius ** 2
    sig2 = problem.sigma ** 2

    best_d = 0
    best_total = math.inf
    inv = []
    for d in range(n):
        variance = sig2 * math.fsum(inv)
        if variance > best_total:
            break
        total = q2 / a[d] ** 2 + variance
        if total < best_total:
            best_total = total
            best_d = d
        inv.append(1.0 / s[d] ** 2)
    if best_d == n - 1:
        warnings.warn(
            f"optimal level hit the end of the range (D* = N-1 = {best_d}); "
            "increase N to resolve the minimum", SaturationWarning, stacklevel=2)
    return best_d, math.sqrt(best_total)


def least_favorable(problem: SequenceProblem, D: int) -> Element:
    """Boundary spike theta_{D+1} = Q/a_{D+1} attaining the worst bias at level D."""
    n = problem.n
    if not 0 <= D <= n - 1:
        raise ValidationError(f"level D = {D} out of range 0..{n - 1}")
    coeffs = np.zeros(n)
    coeffs[D] = problem.ellipsoid.radius / problem.ellipsoid.weights[D]
    return Element(coeffs)


def subset_truncation_risk(problem: SequenceProblem, P) -> float:
    """Worst-case squared risk of the estimator keeping the index set P.

    P uses 1-based indices within {1..N} and must leave the complement
    non-empty.  The risk is Q^2/a_k^2 + sigma^2 * sum_{j in P} 1/s_j^2 with
    k the smallest index outside P; it is never below the risk of the
    initial segment of the same size.
    """
    n = problem.n
    idx = sorted(set(int(j) for j in P))
    if idx and (idx[0] < 1 or idx[-1] > n):
        raise ValidationError(f"P must be a subset of 1..{n}")
    if len(idx) == n:
        raise ValidationError("P covers all indices; no bias coordinate remains")
    in_p = np.zeros(n, dtype=bool)
    for j in idx:
        in_p[j - 1] = True
    k = int(np.nonzero(~in_p)[0][0])  # 0-based position of min complement
    a = problem.ellipsoid.weights
    s = problem.spectrum.values
    bias_sq = problem.ellipsoid.radius ** 2 / a[k] ** 2
    variance = problem.sigma ** 2 * math.fsum(1.0 / s[j - 1] ** 2 for j in idx)
    return bias_sq + variance


def estimate(obs: Observations, D: int) -> Element:
    """Keep the first D observed coefficients, zero the rest."""
    n = len(obs)
    if not 0 <= D <= n:
        raise ValidationError(f"level D = {D} out of range 0..{n}")
    coeffs = np.zeros(n)
    coeffs[:D] = obs.values[:D]
    return Element(coeffs)
