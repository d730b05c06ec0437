"""Monte Carlo validation of the closed-form risks.

Noise is drawn from counter-based Philox streams keyed by
(seed, replication): replication r of a run with master seed m reads the
stream keyed (m, r), and coordinate k reads position k of that stream.
Values therefore depend only on the key tuple, never on evaluation order
or degree of parallelism, and repeated runs are bit-identical.  Averages
accumulate in fixed replication order through math.fsum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import SequenceProblem, ValidationError, ensure_usable
from .truncation import Element, Observations, estimate

__all__ = [
    "SimulationConfig",
    "RiskEstimate",
    "sample_observations",
    "monte_carlo_risk",
    "empirical_worst_case",
]


@dataclass(frozen=True)
class SimulationConfig:
    replications: int
    master_seed: int
    n: int

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValidationError("replications must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValidationError("master_seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class RiskEstimate:
    """Averaged squared error with its Monte Carlo standard error."""

    mean_sq_error: float
    std_error: float
    replications: int
    seed: int


def _stream(seed) -> np.random.Generator:
    """Philox generator keyed by an integer or an (int, int) pair."""
    if isinstance(seed, tuple):
        if len(seed) != 2:
            raise ValidationError("seed tuple must have two components")
        key = np.array([np.uint64(seed[0]), np.uint64(seed[1])], dtype=np.uint64)
    else:
        key = np.array([np.uint64(seed), np.uint64(0)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_observations(theta: Element, problem: SequenceProblem, seed) -> Observations:
    """Draw z_k = theta_k + sigma * (1/s_k) * xi_k from the stream keyed by seed.

    ``seed`` is an integer or an (int, int) pair; identical inputs give
    identical observations.
    """
    if len(theta) != problem.n:
        raise ValidationError(
            f"element length {len(theta)} does not match N = {problem.n}")
    xi = _stream(seed).standard_normal(problem.n)
    noise_scale = problem.sigma / problem.spectrum.values
    values = theta.coeffs + noise_scale * xi
    key = seed if isinstance(seed, tuple) else (int(seed), 0)
    return Observations(values, provenance="simulated", seed=key)


def _squared_error(theta: Element, fitted: Element) -> float:
    d = theta.coeffs - fitted.coeffs
    return math.fsum((d * d).tolist())


def monte_carlo_risk(problem: SequenceProblem, theta: Element, D: int,
                     config: SimulationConfig) -> RiskEstimate:
    """Average squared estimation error over config.replications draws.

    Replication r uses the stream keyed (master_seed, r), so the estimate
    is independent of evaluation order and reproducible bit-for-bit.
    """
    ensure_usable(problem)
    if config.n != problem.n:
        raise ValidationError(
            f"config dimension {config.n} does not match problem N = {problem.n}")
    reps = config.replications
    errors = []
    for r in range(reps):
        obs = sample_observations(theta, problem, (config.master_seed, r))
        errors.append(_squared_error(theta, estimate(obs, D)))
    if min(errors) == max(errors):
        # degenerate (e.g. noiseless) runs have exactly zero sample variance
        return RiskEstimate(errors[0], 0.0, reps, config.master_seed)
    mean = math.fsum(errors) / reps
    var = math.fsum((e - mean) ** 2 for e in errors) / (reps - 1)
    std_error = math.sqrt(var / reps)
    return RiskEstimate(mean, std_error, reps, config.master_seed)


def empirical_worst_case(problem: SequenceProblem, D: int, candidates,
                         config: SimulationConfig) -> tuple[Element, RiskEstimate]:
    """Largest Monte Carlo risk among explicit candidate elements.

    Candidates must lie in the ellipsoid.  All candidates share the same
    noise streams (common random numbers), so comparisons differ only in
    their bias contributions.  Ties keep the earliest candidate.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValidationError("candidate list is empty")
    a = problem.ellipsoid.weights
    q2 = problem.ellipsoid.radius ** 2
    for pos, cand in enumerate(candidates):
        radius_sq = math.fsum((a * cand.coeffs) ** 2)
        if radius_sq > q2 * (1.0 + 1e-12):
            raise ValidationError(
                f"candidate {pos} lies outside the ellipsoid "
                f"(sum a^2 theta^2 = {radius_sq!r} > Q^2 = {q2!r})")

    worst: Element | None = None
    worst_risk: RiskEstimate | None = None
    for cand in candidates:
        risk = monte_carlo_risk(problem, cand, D, config)
        if worst_risk is None or risk.mean_sq_error > worst_risk.mean_sq_error:
            worst, worst_risk = cand, risk
    assert worst is not None and worst_risk is not None
    return worst, worst_risk
