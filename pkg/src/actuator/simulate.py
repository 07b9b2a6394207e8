"""Agent-based generational engine for the three population structures.

Each generation step draws every learner's batch mean directly: the mean is
a sufficient statistic for all three estimators, and conditional on the
teacher assignment it is exactly N(mix - lambda, (sigma_a^2 + omega^2)/n),
so the population law is identical to generating n examples per learner.

Randomness is consumed through streams keyed by (master seed, generation,
purpose) with learners as vector lanes; nothing is shared or sequential
across generations, so output is bit-identical regardless of how work is
scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import (
    ComplexQuadratic,
    LearningConfig,
    Naive,
    PhoneticModel,
    PopulationConfig,
    PopulationState,
    SimpleGaussian,
    TeacherRule,
    check_config,
)
from .learning import ExampleBatch, map_estimates_from_means
from .numerics import (
    DistributionSummary,
    RngStream,
    derive_generator,
    histogram_range,
    summarize,
)

# stream purposes; init uses the t=0 slot
_INIT, _TEACH, _SPLIT, _NOISE = 0, 1, 2, 3


@dataclass(frozen=True)
class FixedGenerations:
    """Stop after exactly T recorded generations (the start counts as one)."""

    T: int

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")


@dataclass(frozen=True)
class Plateau:
    """Stop once mean, p05, and p95 have each moved at most ``delta`` over
    the trailing ``window`` generations, or at ``cap`` generations."""

    window: int = 500
    delta: float = 2.0
    cap: int = 10000

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.cap < self.window:
            raise ValueError(f"cap={self.cap} must be >= window={self.window}")


StopRule = Union[FixedGenerations, Plateau]


@dataclass(frozen=True)
class Trajectory:
    summaries: list[DistributionSummary]
    final_state: PopulationState
    stop_reason: str  # "fixed_T" | "converged" | "cap_reached"
    bin_lo: float
    bin_hi: float

    def means(self) -> np.ndarray:
        return np.array([s.mean for s in self.summaries])

    def variances(self) -> np.ndarray:
        return np.array([s.var for s in self.summaries])

    def p05s(self) -> np.ndarray:
        return np.array([s.p05 for s in self.summaries])

    def p95s(self) -> np.ndarray:
        return np.array([s.p95 for s in self.summaries])


def init_population(
    pop: PopulationConfig,
    model: PhoneticModel,
    learn: LearningConfig,
    stream: RngStream,
) -> PopulationState:
    """Generation 1: M draws from N(start_mean, start_var).

    start_var is a variance.  Under the endpoint-weighting prior the draws
    are clamped into [mu_i, mu_a], since no estimate can leave that range.
    """
    g = stream.generator()
    values = g.normal(pop.start_mean, math.sqrt(pop.start_var), size=pop.M)
    if isinstance(learn.prior, ComplexQuadratic):
        values = np.clip(values, model.mu_i, model.mu_a)
    return PopulationState(t=1, c_values=values)


def produce_batch(
    teacher_c_values: np.ndarray, model: PhoneticModel, stream: RngStream
) -> ExampleBatch:
    """Tokens produced for one learner, one per assigned teacher value.

    Example i is drawn from N(c_i - lambda, sigma_a^2 + omega^2): production
    variability plus the channel bias, independent across tokens.
    """
    c = np.asarray(teacher_c_values, dtype=np.float64)
    sd = math.sqrt(model.noise_var)
    values = stream.generator().normal(c - model.lam, sd)
    return ExampleBatch(values=values)


def _batch_means(
    c_prev: np.ndarray,
    model: PhoneticModel,
    learn: LearningConfig,
    pop: PopulationConfig,
    master_seed: int,
    t: int,
) -> np.ndarray:
    """Every learner's batch mean for the step from generation t."""
    M, n = pop.M, learn.n
    g_teach = derive_generator(master_seed, t, _TEACH, 0)
    if pop.teachers is TeacherRule.ONE:
        mix = c_prev[g_teach.integers(0, M, size=M)]
    elif pop.teachers is TeacherRule.TWO:
        pair = g_teach.integers(0, M, size=(M, 2))
        k = derive_generator(master_seed, t, _SPLIT, 0).binomial(n, 0.5, size=M)
        mix = (k * c_prev[pair[:, 0]] + (n - k) * c_prev[pair[:, 1]]) / n
    else:
        idx = g_teach.integers(0, M, size=(M, n))
        mix = c_prev[idx].mean(axis=1)
    noise_sd = math.sqrt(model.noise_var / n)
    noise = derive_generator(master_seed, t, _NOISE, 0).standard_normal(M) * noise_sd
    return mix - model.lam + noise


def step_generation(
    state: PopulationState,
    model: PhoneticModel,
    learn: LearningConfig,
    pop: PopulationConfig,
    master_seed: int,
) -> PopulationState:
    """Advance one generation: teachers, batches, and estimates for all M learners."""
    ybar = _batch_means(state.c_values, model, learn, pop, master_seed, state.t)
    prior = learn.prior
    if isinstance(prior, Naive):
        estimates = ybar
    elif isinstance(prior, SimpleGaussian):
        D = 1.0 + model.sigma_a2 / (learn.n * prior.tau * prior.tau)
        estimates = (ybar + (D - 1.0) * model.mu_a) / D
    else:
        estimates = map_estimates_from_means(ybar, model, prior.a, learn.n)
    return PopulationState(t=state.t + 1, c_values=estimates)


def _plateaued(summaries: list[DistributionSummary], window: int, delta: float) -> bool:
    if len(summaries) < window + 1:
        return False
    now, then = summaries[-1], summaries[-1 - window]
    return (
        abs(now.mean - then.mean) <= delta
        and abs(now.p05 - then.p05) <= delta
        and abs(now.p95 - then.p95) <= delta
    )


def run(
    model: PhoneticModel,
    learn: LearningConfig,
    pop: PopulationConfig,
    stop: StopRule,
) -> Trajectory:
    """Iterate generations until the stop rule fires, recording summaries."""
    check_config(model, learn, pop)
    lo, hi = histogram_range(model)
    state = init_population(pop, model, learn, RngStream(pop.seed, _INIT, 0, 0))
    summaries = [summarize(state.c_values, lo, hi)]

    if isinstance(stop, FixedGenerations):
        while len(summaries) < stop.T:
            state = step_generation(state, model, learn, pop, pop.seed)
            summaries.append(summarize(state.c_values, lo, hi))
        reason = "fixed_T"
    else:
        while True:
            if _plateaued(summaries, stop.window, stop.delta):
                reason = "converged"
                break
            if len(summaries) >= stop.cap:
                reason = "cap_reached"
                break
            state = step_generation(state, model, learn, pop, pop.seed)
            summaries.append(summarize(state.c_values, lo, hi))

    return Trajectory(
        summaries=summaries,
        final_state=state,
        stop_reason=reason,
        bin_lo=lo,
        bin_hi=hi,
    )
