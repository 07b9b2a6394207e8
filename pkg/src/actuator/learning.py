"""Estimators mapping a learner's examples to a point estimate of c.

Three learner types: maximum likelihood (no prior), Gaussian prior centred
on mu_a, and a quadratic prior weighting both category means.  The last has
no closed-form posterior maximum, so it is found numerically; a brute-force
grid oracle is provided as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PhoneticModel
from .numerics import maximize_scalar


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class ExampleBatch:
    """The n observed F1 values a single learner receives."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError(f"a batch needs at least 2 values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("batch values must all be finite")
        arr = arr.copy() if arr.flags.writeable else arr
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class PosteriorSummary:
    post_mean: float
    post_var: float


def estimate_naive(batch: ExampleBatch) -> float:
    """Maximum-likelihood estimate: the batch mean."""
    return batch.mean


def simple_posterior(batch: ExampleBatch, model: PhoneticModel, tau: float) -> PosteriorSummary:
    """Conjugate Gaussian posterior over c given the batch.

    post_mean = (ybar + mu_a r) / (1 + r) and post_var = (sigma_a^2/n)/(1 + r)
    with r = sigma_a^2 / (n tau^2).
    """
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    r = model.sigma_a2 / (batch.n * tau * tau)
    denom = 1.0 + r
    return PosteriorSummary(
        post_mean=(batch.mean + model.mu_a * r) / denom,
        post_var=(model.sigma_a2 / batch.n) / denom,
    )


def estimate_simple(batch: ExampleBatch, model: PhoneticModel, tau: float) -> float:
    """Point estimate under the Gaussian prior.

    Posterior maximum and posterior mean coincide for a Gaussian posterior,
    so this returns simple_posterior(...).post_mean exactly.
    """
    return simple_posterior(batch, model, tau).post_mean


def concavity_threshold(model: PhoneticModel, n: int) -> float:
    """Prior strengths above 4 sigma_a^2 / (n delta_mu^2) give a log posterior
    concave on [mu_i, mu_a] for any data."""
    return 4.0 * model.sigma_a2 / (n * model.delta_mu * model.delta_mu)


def complex_log_posterior(c, batch: ExampleBatch, model: PhoneticModel, a: float):
    """Unnormalized log posterior under the endpoint-weighting prior.

    -sum_i (y_i - c)^2 / (2 sigma_a^2) + log[a delta_mu^2 + (c - mid)^2],
    dropping the additive normalizing constant.  Accepts scalar or array c.
    """
    c_arr = np.asarray(c, dtype=np.float64)
    ybar = batch.mean
    ss = float(np.sum((batch.values - ybar) ** 2))
    quad = a * model.delta_mu**2 + (c_arr - model.midpoint) ** 2
    if np.any(quad <= 0):
        raise DomainError(f"prior term must be positive, got min {np.min(quad)}")
    log_like = -(batch.n * (c_arr - ybar) ** 2 + ss) / (2.0 * model.sigma_a2)
    out = log_like + np.log(quad)
    return float(out) if np.isscalar(c) or c_arr.ndim == 0 else out


def estimate_complex(batch: ExampleBatch, model: PhoneticModel, a: float) -> float:
    """Global maximizer of the endpoint-prior log posterior over [mu_i, mu_a].

    In the concave regime (a above concavity_threshold) one bounded search
    suffices.  Otherwise the posterior can have two local maxima, one on
    either side of the midpoint, so the search is run from three starts
    (near mu_i, the midpoint, near mu_a) and both interval endpoints are
    compared as well; the best candidate wins, ties to the smaller c.
    """
    if not a > 0:
        raise DomainError(f"prior strength a must be > 0, got {a}")
    lo, hi = model.mu_i, model.mu_a
    tol_c = 1e-4 * model.delta_mu

    def f(c: float) -> float:
        return complex_log_posterior(c, batch, model, a)

    if a > concavity_threshold(model, batch.n):
        candidates = [maximize_scalar(f, lo, hi, tol_c)]
    else:
        mid = model.midpoint
        eps = 1e-6 * model.delta_mu
        candidates = [
            maximize_scalar(f, lo + eps, mid, tol_c),
            maximize_scalar(f, mid, hi - eps, tol_c),
            maximize_scalar(f, lo + eps, hi - eps, tol_c),
        ]
    candidates += [lo, hi]
    best_c, best_val = None, -math.inf
    for cand in sorted(min(hi, max(lo, c)) for c in candidates):
        val = f(cand)
        if val > best_val:
            best_c, best_val = cand, val
    return best_c


def grid_map_oracle(batch: ExampleBatch, model: PhoneticModel, a: float, spacing: float) -> float:
    """Brute-force MAP: best grid point in [mu_i, mu_a], endpoints included.

    Ties break toward the smallest c.  Independent of estimate_complex by
    construction; used as its oracle.
    """
    if not spacing > 0:
        raise ValueError(f"spacing must be > 0, got {spacing}")
    steps = int(math.floor(model.delta_mu / spacing + 1e-9))
    grid = model.mu_i + spacing * np.arange(steps + 1)
    grid = np.minimum(grid, model.mu_a)
    if grid[-1] < model.mu_a:
        grid = np.append(grid, model.mu_a)
    values = complex_log_posterior(grid, batch, model, a)
    return float(grid[int(np.argmax(values))])


# ---------------------------------------------------------------------------
# Vectorized MAP for whole generations.
#
# The log posterior depends on the data only through the batch mean, so a
# population step never needs individual examples.  Its stationary points in
# u = c - mid solve the cubic
#
#     u^3 - w u^2 + (b - 2 s) u - w b = 0,
#
# with w = ybar - mid, b = a delta_mu^2, s = sigma_a^2 / n.  The global
# maximizer is one of those roots or an interval endpoint, so evaluating the
# posterior at all candidates gives the exact argmax without iteration.
# ---------------------------------------------------------------------------


def map_estimates_from_means(ybar, model: PhoneticModel, a: float, n: int) -> np.ndarray:
    """MAP estimates under the endpoint prior for an array of batch means.

    Matches estimate_complex on equal inputs (same maximizer, found through
    the stationary-point cubic instead of iterative search).
    """
    if not a > 0:
        raise DomainError(f"prior strength a must be > 0, got {a}")
    w = np.atleast_1d(np.asarray(ybar, dtype=np.float64)) - model.midpoint
    half = 0.5 * model.delta_mu
    b = a * model.delta_mu**2
    s = model.sigma_a2 / n

    # depressed cubic v^3 + p v + q via u = v - A/3, A = -w
    A = -w
    B = b - 2.0 * s
    C = -w * b
    p = B - A * A / 3.0
    q = 2.0 * A**3 / 27.0 - A * B / 3.0 + C
    disc = 0.25 * q * q + p**3 / 27.0

    roots = np.full((w.size, 3), np.nan)
    three = (p < 0) & (disc < 0)
    if np.any(three):
        pt, qt = p[three], q[three]
        rho = np.sqrt(-pt / 3.0)
        theta = np.arccos(np.clip(1.5 * qt / (pt * rho), -1.0, 1.0))
        for k in range(3):
            roots[three, k] = 2.0 * rho * np.cos(theta / 3.0 - 2.0 * np.pi * k / 3.0)
    single = ~three
    if np.any(single):
        sq = np.sqrt(np.maximum(disc[single], 0.0))
        h = -0.5 * q[single]
        roots[single, 0] = np.cbrt(h + sq) + np.cbrt(h - sq)
    u_roots = roots + w[:, None] / 3.0

    # one Newton step on the posterior derivative tightens float error
    informative = ~np.isnan(u_roots)
    ur = np.where(informative, u_roots, 0.0)
    denom_prior = b + ur * ur
    grad = (w[:, None] - ur) / s + 2.0 * ur / denom_prior
    curv = -1.0 / s + 2.0 * (b - ur * ur) / (denom_prior * denom_prior)
    step = np.where((curv < 0) & informative, grad / (-curv), 0.0)
    u_roots = np.where(informative, np.clip(ur + step, -half, half), np.nan)

    cand = np.concatenate(
        [u_roots, np.full((w.size, 1), -half), np.full((w.size, 1), half)], axis=1
    )
    cand = np.where(np.isnan(cand), half, cand)
    cand = np.clip(cand, -half, half)
    cand.sort(axis=1)  # ascending, so first argmax is the smallest c on ties
    vals = -((cand - w[:, None]) ** 2) / (2.0 * s) + np.log(b + cand * cand)
    pick = np.argmax(vals, axis=1)
    u_best = cand[np.arange(w.size), pick]
    return u_best + model.midpoint
