"""Bounded scalar maximization, keyed random streams, and summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PhoneticModel, TeacherRule

HISTOGRAM_BINS = 200
DENSITY_FLOOR = 1e-4  # normalized-density threshold for the figure-style export

_GOLD = 0.5 * (3.0 - math.sqrt(5.0))
_MASK64 = (1 << 64) - 1


class InvalidBracket(ValueError):
    pass


def maximize_scalar(f, lo: float, hi: float, tol: float = 1e-8, max_iter: int = 500) -> float:
    """Return an argmax of ``f`` on [lo, hi] by golden-section search with
    successive parabolic interpolation (Brent's bounded method, run on -f).

    For unimodal ``f`` the result is within ``tol`` of the true argmax; for a
    multimodal ``f`` it is only guaranteed to be a local maximizer.
    """
    if not lo < hi:
        raise InvalidBracket(f"need lo < hi, got [{lo}, {hi}]")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")

    a, b = lo, hi
    x = w = v = a + _GOLD * (b - a)
    fx = fw = fv = -f(x)
    d = e = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        # half-width target; termination leaves the argmax within tol of x
        tol1 = 0.5 * tol + 4.0 * np.finfo(float).eps * abs(x)
        tol2 = 2.0 * tol1
        if abs(x - mid) <= tol2 - 0.5 * (b - a):
            break
        use_golden = True
        if abs(e) > tol1:
            # parabola through (v, fv), (w, fw), (x, fx)
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev, e = e, d
            if abs(p) < abs(0.5 * q * e_prev) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = tol1 if x < mid else -tol1
                use_golden = False
        if use_golden:
            e = (b - x) if x < mid else (a - x)
            d = _GOLD * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d > 0 else -tol1)
        fu = -f(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x


# ---------------------------------------------------------------------------
# Random streams.
#
# Draws are keyed, never sequential across owners: the value produced for a
# given (master_seed, t, learner, counter) tuple does not depend on what any
# other stream consumed, which is what makes simulator output independent of
# worker scheduling.
# ---------------------------------------------------------------------------


def derive_generator(*key_parts: int) -> np.random.Generator:
    """Counter-based generator keyed by an arbitrary tuple of integers."""
    entropy = [int(p) & _MASK64 for p in key_parts]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class RngStream:
    """Keyed random stream: a pure function of its identifying tuple.

    Equal tuples yield identical sequences; tuples differing in any field
    yield statistically independent ones.
    """

    master_seed: int
    t: int = 0
    learner: int = 0
    counter: int = 0

    def generator(self) -> np.random.Generator:
        return derive_generator(self.master_seed, self.t, self.learner, self.counter)

    def child(self, counter: int) -> "RngStream":
        return RngStream(self.master_seed, self.t, self.learner, counter)


def sample_normal(stream: RngStream, mean: float, sd: float) -> float:
    """One draw from N(mean, sd^2); sd = 0 returns the mean exactly."""
    if sd < 0:
        raise ValueError(f"sd must be >= 0, got {sd}")
    if sd == 0:
        return float(mean)
    return float(stream.generator().normal(mean, sd))


def assign_teachers(stream: RngStream, rule: TeacherRule, M: int, n: int) -> np.ndarray:
    """Per-example teacher indices for one learner (length n).

    ONE repeats a single uniform index; TWO draws two indices with
    replacement and routes each example to either with probability 1/2; ALL
    draws every example's index independently and uniformly.
    """
    if M < 2 or n < 2:
        raise ValueError(f"need M >= 2 and n >= 2, got M={M}, n={n}")
    g = stream.generator()
    if rule is TeacherRule.ONE:
        return np.full(n, g.integers(0, M), dtype=np.int64)
    if rule is TeacherRule.TWO:
        pair = g.integers(0, M, size=2)
        return pair[g.integers(0, 2, size=n)]
    return g.integers(0, M, size=n)


# ---------------------------------------------------------------------------
# Summary statistics.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistributionSummary:
    mean: float
    var: float   # population variance (divisor M)
    p05: float   # nearest-rank percentiles
    p95: float
    histogram: np.ndarray  # counts over HISTOGRAM_BINS equal bins, sum == M

    def __post_init__(self) -> None:
        arr = np.asarray(self.histogram, dtype=np.int64)
        arr = arr.copy() if arr.flags.writeable else arr
        arr.flags.writeable = False
        object.__setattr__(self, "histogram", arr)


def histogram_range(model: PhoneticModel) -> tuple[float, float]:
    """Fixed bin range used by every summary of a run: [mu_i-5*sigma_a, mu_a+5*sigma_a]."""
    return model.mu_i - 5.0 * model.sigma_a, model.mu_a + 5.0 * model.sigma_a


def nearest_rank(sorted_values: np.ndarray, percent: int) -> float:
    """Nearest-rank percentile of an ascending array (no interpolation)."""
    size = len(sorted_values)
    rank = max(1, -(-percent * size // 100))  # ceil(percent*size/100) in ints
    return float(sorted_values[rank - 1])


def summarize(c_values: np.ndarray, lo: float, hi: float) -> DistributionSummary:
    """Mean/variance, 5th/95th percentiles, and fixed-bin histogram counts.

    Values outside [lo, hi] are clipped into the edge bins so counts always
    sum to the population size.
    """
    arr = np.asarray(c_values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty population")
    ordered = np.sort(arr)
    counts, _ = np.histogram(np.clip(arr, lo, hi), bins=HISTOGRAM_BINS, range=(lo, hi))
    return DistributionSummary(
        mean=float(arr.mean()),
        var=float(arr.var()),
        p05=nearest_rank(ordered, 5),
        p95=nearest_rank(ordered, 95),
        histogram=counts,
    )


def bin_centers(lo: float, hi: float, bins: int = HISTOGRAM_BINS) -> np.ndarray:
    edges = np.linspace(lo, hi, bins + 1)
    return 0.5 * (edges[:-1] + edges[1:])


def thresholded_density(summary: DistributionSummary, lo: float, hi: float) -> np.ndarray:
    """Normalized histogram density with bins under DENSITY_FLOOR zeroed."""
    counts = summary.histogram
    total = counts.sum()
    width = (hi - lo) / len(counts)
    density = counts / (total * width)
    density[density < DENSITY_FLOOR] = 0.0
    return density
