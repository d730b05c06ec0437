"""Reconstruction-rate experiments across spectrum/smoothness regimes.

Regime tags name the spectrum kind first, the smoothness kind second:

    pp  power spectrum / power smoothness      rate sigma^(k/(k+p+1/2))
    pe  power spectrum / analytic smoothness   rate sigma*log(1/sigma)^(p+1/2)
    ep  exponential spectrum / power smoothness  rate log(1/sigma)^-k
    ee  exponential spectrum / analytic smoothness  rate sigma^(k/(p+k))

Power-type rates (pp, ee) are fitted as the slope of log(bound) against
log(sigma); the logarithmic regime (ep) as the slope of log(bound) against
log(log(1/sigma)); the near-linear regime (pe) as the slope of
log(bound/sigma) against log(log(1/sigma)).  Sweeps double the model
dimension until no optimizer touches the end of its search range.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bounds import maximize_J_over_ellipsoid, minimax_sandwich
from .problem import (
    SaturationError,
    SaturationWarning,
    SequenceProblem,
    ValidationError,
    ensure_usable,
    make_exponential_class,
    make_exponential_spectrum,
    make_power_class,
    make_power_spectrum,
)

__all__ = [
    "REGIME_TAGS",
    "RegimeSpec",
    "SweepRow",
    "RateFit",
    "IllposednessLabel",
    "sweep",
    "fit_rate",
    "classify_illposedness",
    "testing_radius_sq",
    "deterministic_rate_sq",
]

REGIME_TAGS = ("pp", "pe", "ep", "ee")
_KIND = {"p": "power", "e": "exponential"}
_MAX_N = 1 << 20


class IllposednessLabel(Enum):
    MILD = "mild"
    MODERATE = "moderate"
    SEVERE = "severe"


@dataclass(frozen=True)
class RegimeSpec:
    """One regime cell: generator kinds, their exponents, and a noise grid."""

    spectrum_kind: str
    smoothness_kind: str
    p: float
    kappa: float
    radius: float
    n: int
    sigma_grid: tuple

    def __post_init__(self) -> None:
        if self.spectrum_kind not in ("power", "exponential"):
            raise ValidationError(f"unknown spectrum kind {self.spectrum_kind!r}")
        if self.smoothness_kind not in ("power", "exponential"):
            raise ValidationError(f"unknown smoothness kind {self.smoothness_kind!r}")
        grid = tuple(float(s) for s in self.sigma_grid)
        if not grid or any(s <= 0.0 for s in grid):
            raise ValidationError("sigma grid must be non-empty and positive")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("sigma grid must be strictly decreasing")
        object.__setattr__(self, "sigma_grid", grid)

    @property
    def tag(self) -> str:
        return self.spectrum_kind[0] + self.smoothness_kind[0]

    @classmethod
    def from_tag(cls, tag: str, p: float, kappa: float, sigma_grid,
                 radius: float = 1.0, n: int = 64) -> "RegimeSpec":
        if tag not in REGIME_TAGS:
            raise ValidationError(f"unknown regime tag {tag!r}; use one of {REGIME_TAGS}")
        return cls(_KIND[tag[0]], _KIND[tag[1]], float(p), float(kappa),
                   float(radius), int(n), tuple(sigma_grid))


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    d_star: int
    upper: float
    lower: float
    j_star: float
    testing_sq: float
    deterministic_sq: float


@dataclass(frozen=True)
class RateFit:
    regime: str
    fitted: float
    theory: float
    residual: float
    d_star_trace: tuple


def _build_problem(spec: RegimeSpec, sigma: float, n: int) -> SequenceProblem:
    if spec.spectrum_kind == "power":
        spectrum = make_power_spectrum(spec.p, n)
    else:
        spectrum = make_exponential_spectrum(spec.p, n)
    if spec.smoothness_kind == "power":
        ellipsoid = make_power_class(spec.kappa, n, spec.radius)
    else:
        ellipsoid = make_exponential_class(spec.kappa, n, spec.radius)
    return SequenceProblem(spectrum, ellipsoid, sigma, n)


def testing_radius_sq(problem: SequenceProblem) -> tuple[int, float]:
    """Squared separation radius for detection: minimize over D the larger of
    Q^2/a_{D+1}^2 and sigma^2 * sqrt(sum_{j<=D} 1/s_j^4).

    The fourth powers make this never exceed the estimation bound squared.
    """
    ensure_usable(problem)
    n = problem.n
    a = problem.ellipsoid.weights
    s = problem.spectrum.values
    q2 = problem.ellipsoid.radius ** 2
    sig2 = problem.sigma ** 2

    best_d, best = 0, math.inf
    inv4: list[float] = []
    for d in range(n):
        noise = sig2 * math.sqrt(math.fsum(inv4))
        if noise > best:
            break
        value = max(q2 / a[d] ** 2, noise)
        if value < best:
            best, best_d = value, d
        inv4.append(1.0 / s[d] ** 4)
    if best_d == n - 1:
        warnings.warn(f"testing radius optimum hit D = N-1 = {best_d}",
                      SaturationWarning, stacklevel=2)
    return best_d, best


def deterministic_rate_sq(problem: SequenceProblem) -> tuple[int, float]:
    """Squared bound for bounded deterministic noise: minimize over D the sum
    Q^2/a_{D+1}^2 + sigma^2/s_D^2 (bias only at D = 0)."""
    ensure_usable(problem)
    n = problem.n
    a = problem.ellipsoid.weights
    s = problem.spectrum.values
    q2 = problem.ellipsoid.radius ** 2
    sig2 = problem.sigma ** 2

    best_d, best = 0, q2 / a[0] ** 2
    for d in range(1, n):
        noise = sig2 / s[d - 1] ** 2
        if noise > best:
            break
        value = q2 / a[d] ** 2 + noise
        if value < best:
            best, best_d = value, d
    if best_d == n - 1:
        warnings.warn(f"deterministic rate optimum hit D = N-1 = {best_d}",
                      SaturationWarning, stacklevel=2)
    return best_d, best


def _worker_count() -> int:
    raw = os.environ.get("MSEQ_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ValidationError(f"MSEQ_THREADS must be an integer, got {raw!r}")
    if cap < 0:
        raise ValidationError("MSEQ_THREADS must be >= 0 (0 = auto)")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, 32))


def _sweep_point(spec: RegimeSpec, sigma: float, n: int) -> SweepRow | None:
    """One grid point at dimension n, or None when any optimizer saturates.

    Saturation is detected from returned values (an optimizer at D = N-1,
    or water-filling that capped every coordinate), not from warnings:
    warning filters are process-global and grid points run on pool threads.
    """
    problem = _build_problem(spec, sigma, n)
    report = minimax_sandwich(problem)
    d_test, testing = testing_radius_sq(problem)
    d_det, deterministic = deterministic_rate_sq(problem)
    if max(report.d_star, d_test, d_det) >= n - 1:
        return None
    solution = maximize_J_over_ellipsoid(problem)
    if len(solution.set_p) == n and sigma > 0.0:
        return None
    return SweepRow(sigma, report.d_star, report.upper, report.lower,
                    report.j_star, testing, deterministic)


def sweep(spec: RegimeSpec) -> list[SweepRow]:
    """Evaluate bounds on the whole noise grid, doubling N until resolved.

    Grid points are independent and evaluated concurrently (worker count
    capped by MSEQ_THREADS); the output is ordered by the input grid.
    """
    workers = _worker_count()
    n = spec.n
    while True:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SaturationWarning)
            try:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    rows = list(pool.map(lambda s: _sweep_point(spec, s, n),
                                         spec.sigma_grid))
            except ValidationError as exc:
                # generator over/underflow at this N: grid cannot be resolved
                raise SaturationError(
                    f"regime {spec.tag}: dimension N = {n} is not representable "
                    f"({exc}); the noise grid cannot be resolved") from exc
        if all(row is not None for row in rows):
            return rows
        if n >= _MAX_N:
            raise SaturationError(
                f"regime {spec.tag}: optimizer still saturated at N = {n}; "
                "refusing to grow the model further")
        n *= 2


_FIT_MODE = {"pp": "power", "ee": "power", "ep": "loglog", "pe": "mild"}


def _theory_value(spec: RegimeSpec) -> float:
    tag = spec.tag
    if tag == "pp":
        return spec.kappa / (spec.kappa + spec.p + 0.5)
    if tag == "ee":
        return spec.kappa / (spec.p + spec.kappa)
    if tag == "ep":
        return -spec.kappa
    return spec.p + 0.5  # pe


def fit_rate(table, spec: RegimeSpec) -> RateFit:
    """Least-squares rate fit in the regime's coordinates (see module docs)."""
    rows = list(table)
    if len(rows) < 5:
        raise ValidationError(f"rate fit needs >= 5 grid points, got {len(rows)}")
    sigma = np.array([row.sigma for row in rows])
    bound = np.array([row.upper for row in rows])
    if np.any(bound <= 0.0):
        raise ValidationError("degenerate grid: non-positive bounds")

    mode = _FIT_MODE[spec.tag]
    if mode == "power":
        x, y = np.log(sigma), np.log(bound)
    elif mode == "loglog":
        x, y = np.log(np.log(1.0 / sigma)), np.log(bound)
    else:
        x, y = np.log(np.log(1.0 / sigma)), np.log(bound / sigma)
    if float(np.ptp(x)) <= 0.0:
        raise ValidationError("degenerate grid: no spread in fit coordinates")
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(slope * x + intercept - y)))
    trace = tuple((row.sigma, row.d_star) for row in rows)
    return RateFit(spec.tag, float(slope), _theory_value(spec), residual, trace)


def classify_illposedness(fit: RateFit, residual_threshold: float = 0.5) -> IllposednessLabel:
    """Label the statistical problem from the fitted rate.

    Mild: the bound is linear in sigma up to a polylogarithmic factor.
    Severe: the bound decays only polylogarithmically.  Moderate: power type.
    A residual above the threshold means the fit does not follow its
    regime's shape and classification is refused.
    """
    if fit.residual > residual_threshold:
        raise ValidationError(
            f"ambiguous fit: residual {fit.residual!r} exceeds "
            f"{residual_threshold!r} in fit coordinates")
    if fit.regime == "pe":
        return IllposednessLabel.MILD
    if fit.regime == "ep":
        return IllposednessLabel.SEVERE
    return IllposednessLabel.MODERATE
