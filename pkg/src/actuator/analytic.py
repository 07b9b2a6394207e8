"""Exact iteration and fixed points of the population mean/variance maps.

Both prior families share one update once the shrinkage factor D and the
teacher-mixing factor phi are known:

    mean' = (mean - lambda + (D - 1) * mu_a) / D
    var'  = (sigma_a^2 + omega^2) / (n * D^2) + var * phi / D^2

with D = 1 for naive (maximum-likelihood) learners, D = 1 + sigma_a^2 /
(n tau^2) for learners with a Gaussian prior, and phi = (n + m - 1) / (n m)
for m teachers (phi -> 1/n as m -> infinity, phi = 1 for a single teacher).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    LearningConfig,
    MomentState,
    Naive,
    PhoneticModel,
    SimpleGaussian,
    TeacherRule,
)


class PriorMismatch(ValueError):
    pass


class ComparisonRequiresZeroBias(ValueError):
    pass


@dataclass(frozen=True)
class RecurrenceKind:
    """Selects a prior family and teacher count for the moment recurrences.

    ``m`` is 1, an integer >= 2, or math.inf (the all-teachers limit, kept
    exact rather than approximated by a large integer).
    """

    family: str  # "naive" | "simple"
    m: float

    def __post_init__(self) -> None:
        if self.family not in ("naive", "simple"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.m != 1 and not self.m >= 2:
            raise ValueError(f"teacher count must be 1 or >= 2, got {self.m}")
        if self.m != math.inf and int(self.m) != self.m:
            raise ValueError(f"finite teacher count must be an integer, got {self.m}")

    @property
    def is_single(self) -> bool:
        return self.m == 1


def naive_single() -> RecurrenceKind:
    return RecurrenceKind("naive", 1)


def naive_multi(m: float) -> RecurrenceKind:
    return RecurrenceKind("naive", m)


def simple_single() -> RecurrenceKind:
    return RecurrenceKind("simple", 1)


def simple_multi(m: float) -> RecurrenceKind:
    return RecurrenceKind("simple", m)


def kind_for(prior, rule: TeacherRule) -> RecurrenceKind:
    """Map a prior spec and teacher rule onto the matching recurrence."""
    if isinstance(prior, Naive):
        family = "naive"
    elif isinstance(prior, SimpleGaussian):
        family = "simple"
    else:
        raise PriorMismatch("no closed-form recurrence for the endpoint-weighting prior")
    m = {TeacherRule.ONE: 1.0, TeacherRule.TWO: 2.0, TeacherRule.ALL: math.inf}[rule]
    return RecurrenceKind(family, m)


def mixing_factor(n: int, m: float) -> float:
    """phi = (n + m - 1) / (n m); the all-teachers limit is exactly 1/n."""
    if m == math.inf:
        return 1.0 / n
    return (n + m - 1) / (n * m)


def _shrinkage(kind: RecurrenceKind, model: PhoneticModel, learn: LearningConfig) -> float:
    if kind.family == "naive":
        if not isinstance(learn.prior, Naive):
            raise PriorMismatch(f"kind {kind} requires a Naive prior, got {learn.prior}")
        return 1.0
    if not isinstance(learn.prior, SimpleGaussian):
        raise PriorMismatch(f"kind {kind} requires a SimpleGaussian prior, got {learn.prior}")
    tau = learn.prior.tau
    return 1.0 + model.sigma_a2 / (learn.n * tau * tau)


@dataclass(frozen=True)
class FixedPointReport:
    """Attractors of the moment maps.

    ``mean_fp`` / ``var_fp`` are None when the corresponding map has no
    finite attractor (unbounded drift or growth).  ``mean_conserved`` marks
    the naive zero-bias case where every mean is stationary, so no single
    fixed point exists.  ``geometric_rate`` is the per-step contraction of
    |var - var_fp| where a variance fixed point exists.
    """

    mean_fp: Optional[float]
    mean_conserved: bool
    var_fp: Optional[float]
    geometric_rate: Optional[float]


def step_moments(
    kind: RecurrenceKind,
    state: MomentState,
    model: PhoneticModel,
    learn: LearningConfig,
) -> MomentState:
    """One generation of the mean/variance recurrence selected by ``kind``."""
    D = _shrinkage(kind, model, learn)
    phi = mixing_factor(learn.n, kind.m)
    mean = (state.mean - model.lam + (D - 1.0) * model.mu_a) / D
    var = model.noise_var / (learn.n * D * D) + state.var * phi / (D * D)
    return MomentState(mean=mean, var=var)


def fixed_points(
    kind: RecurrenceKind, model: PhoneticModel, learn: LearningConfig
) -> FixedPointReport:
    D = _shrinkage(kind, model, learn)
    phi = mixing_factor(learn.n, kind.m)
    if kind.family == "naive":
        mean_fp = None
        mean_conserved = model.lam == 0.0
    else:
        tau = learn.prior.tau
        mean_fp = model.mu_a - model.lam * learn.n * tau * tau / model.sigma_a2
        mean_conserved = False
    contraction = D * D - phi
    if contraction > 0:
        var_fp = model.noise_var / (learn.n * contraction)
        rate = phi / (D * D)
    else:
        # single-teacher naive: variance grows without bound
        var_fp = None
        rate = None
    return FixedPointReport(
        mean_fp=mean_fp,
        mean_conserved=mean_conserved,
        var_fp=var_fp,
        geometric_rate=rate,
    )


def trajectory_moments(
    kind: RecurrenceKind,
    start: MomentState,
    model: PhoneticModel,
    learn: LearningConfig,
    T: int,
) -> list[MomentState]:
    """Moments of generations 1..T; element 0 is the starting state itself."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    out = [start]
    for _ in range(T - 1):
        out.append(step_moments(kind, out[-1], model, learn))
    return out


def large_n_var_expansion(
    kind: RecurrenceKind, model: PhoneticModel, learn: LearningConfig
) -> float:
    """First-order (in 1/n) stable variance for Gaussian-prior learners.

    Single teacher: tau^2 K/2 - sigma_a^2 K/(4n); m >= 2 teachers:
    (m/(m-1)) sigma_a^2 K/n, whose all-teachers limit is sigma_a^2 K/n.
    K = 1 + omega^2/sigma_a^2.  Note the multi-teacher forms carry no tau.
    """
    if kind.family != "simple" or not isinstance(learn.prior, SimpleGaussian):
        raise PriorMismatch("large-n expansion is defined for the Gaussian prior only")
    K = 1.0 + model.omega2 / model.sigma_a2
    if kind.is_single:
        tau = learn.prior.tau
        return tau * tau * K / 2.0 - model.sigma_a2 * K / (4.0 * learn.n)
    if kind.m == math.inf:
        return model.sigma_a2 * K / learn.n
    return (kind.m / (kind.m - 1.0)) * model.sigma_a2 * K / learn.n


def iterated_learning_comparison(
    model: PhoneticModel, learn: LearningConfig
) -> tuple[float, float]:
    """Stationary variance here versus in a single-agent transmission chain.

    Both assume zero channel bias.  Returns (population-model variance,
    chain-model variance); the first is smaller by at least a factor of two.
    """
    if not isinstance(learn.prior, SimpleGaussian):
        raise PriorMismatch("comparison is defined for the Gaussian prior only")
    if model.lam != 0 or model.omega != 0:
        raise ComparisonRequiresZeroBias(
            f"requires lambda = omega = 0, got lambda={model.lam}, omega={model.omega}"
        )
    tau = learn.prior.tau
    r = model.sigma_a2 / (learn.n * tau * tau)
    ours = tau * tau / (2.0 + r)
    chain = tau * tau * (1.0 + r)
    return ours, chain


def propagated_moment_se(
    kind: RecurrenceKind,
    start_var: float,
    model: PhoneticModel,
    learn: LearningConfig,
    M: int,
    T: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Standard errors of finite-population moments around the exact maps.

    A population of M agents deviates from the infinite-population
    recurrence by sampling noise that is injected every generation and then
    carried forward by the maps themselves (slope 1/D for the mean, phi/D^2
    for the variance).  First-order propagation of that noise gives, per
    generation, the SD of the Monte Carlo population mean and variance about
    their analytic values.  Index 0 corresponds to the initial draw.
    """
    D = _shrinkage(kind, model, learn)
    phi = mixing_factor(learn.n, kind.m)
    rho_mean2 = 1.0 / (D * D)
    rho_var2 = (phi / (D * D)) ** 2
    var_traj = trajectory_moments(kind, MomentState(0.0, start_var), model, learn, T)
    mean_dev = np.empty(T)
    var_dev = np.empty(T)
    mean_dev[0] = start_var / M
    var_dev[0] = 2.0 * start_var * start_var / M
    for t in range(1, T):
        v_new = var_traj[t].var
        mean_dev[t] = rho_mean2 * mean_dev[t - 1] + v_new / M
        var_dev[t] = rho_var2 * var_dev[t - 1] + 2.0 * v_new * v_new / M
    return np.sqrt(mean_dev), np.sqrt(var_dev)
