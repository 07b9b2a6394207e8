"""Parameter-grid driver: final-mean phase surfaces and bifurcation location."""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    ComplexQuadratic,
    LearningConfig,
    Naive,
    PhoneticModel,
    PopulationConfig,
    SimpleGaussian,
    TeacherRule,
)
from .simulate import StopRule, Trajectory, run


class InsufficientGrid(ValueError):
    pass


@dataclass(frozen=True)
class SweepGrid:
    """Grid over prior strength and channel bias, per teacher rule.

    ``a_values`` is the prior-strength axis: endpoint-prior ``a`` when the
    base prior is ComplexQuadratic, ``tau`` (Hz) when it is SimpleGaussian,
    and inert for Naive.  ``lambda_values`` are channel-bias means (Hz).
    """

    a_values: tuple
    lambda_values: tuple
    teacher_rules: tuple
    replicates: int
    model: PhoneticModel
    learn: LearningConfig
    pop: PopulationConfig
    stop: StopRule

    def __post_init__(self) -> None:
        if not self.a_values or not self.lambda_values or not self.teacher_rules:
            raise ValueError("a_values, lambda_values, and teacher_rules must be nonempty")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")

    def cells(self) -> list[tuple[TeacherRule, float, float, int]]:
        return [
            (rule, a, lam, rep)
            for rule in self.teacher_rules
            for a in self.a_values
            for lam in self.lambda_values
            for rep in range(self.replicates)
        ]


@dataclass(frozen=True)
class CellRecord:
    rule: TeacherRule
    a: float
    lam: float
    replicate: int
    final_mean: float
    final_var: float
    stop_reason: str
    generations: int
    seconds: float
    seed: int
    error: Optional[str] = None


@dataclass(frozen=True)
class SweepResult:
    grid: SweepGrid
    records: list[CellRecord]


def cell_seed(master_seed: int, rule: TeacherRule, a: float, lam: float, replicate: int) -> int:
    """Seed derived from the cell's own coordinates, not its grid position.

    Hashing the parameter values keeps every cell's stream independent of
    which other cells exist, so adding or removing grid points never
    changes another cell's output.
    """
    tag = f"{master_seed}|{rule.value}|{float(a)!r}|{float(lam)!r}|{replicate}"
    digest = hashlib.sha256(tag.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


def _cell_config(
    grid: SweepGrid, rule: TeacherRule, a: float, lam: float, rep: int
) -> tuple[PhoneticModel, LearningConfig, PopulationConfig]:
    model = replace(grid.model, lam=lam)
    prior = grid.learn.prior
    if isinstance(prior, ComplexQuadratic):
        prior = ComplexQuadratic(a=a)
    elif isinstance(prior, SimpleGaussian):
        prior = SimpleGaussian(tau=a)
    learn = replace(grid.learn, prior=prior)
    pop = replace(
        grid.pop,
        teachers=rule,
        seed=cell_seed(grid.pop.seed, rule, a, lam, rep),
    )
    return model, learn, pop


def _run_cell(grid: SweepGrid, cell: tuple) -> CellRecord:
    rule, a, lam, rep = cell
    model, learn, pop = _cell_config(grid, rule, a, lam, rep)
    started = time.perf_counter()
    try:
        traj: Trajectory = run(model, learn, pop, grid.stop)
    except Exception as exc:  # record, never abort the sweep
        return CellRecord(
            rule=rule, a=a, lam=lam, replicate=rep,
            final_mean=float("nan"), final_var=float("nan"),
            stop_reason="error", generations=0,
            seconds=time.perf_counter() - started,
            seed=pop.seed, error=f"{type(exc).__name__}: {exc}",
        )
    last = traj.summaries[-1]
    return CellRecord(
        rule=rule, a=a, lam=lam, replicate=rep,
        final_mean=last.mean, final_var=last.var,
        stop_reason=traj.stop_reason, generations=len(traj.summaries),
        seconds=time.perf_counter() - started,
        seed=pop.seed, error=None,
    )


def run_sweep(grid: SweepGrid, threads: int = 1) -> SweepResult:
    """Run every cell; output is identical for any worker count."""
    cells = grid.cells()
    if threads <= 1:
        records = [_run_cell(grid, cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda c: _run_cell(grid, c), cells))
    return SweepResult(grid=grid, records=records)


@dataclass(frozen=True)
class BifurcationFinding:
    lambda_star: float
    jump: float


def bifurcation_from_profile(
    lambdas: np.ndarray, means: np.ndarray, delta_mu: float
) -> Optional[BifurcationFinding]:
    """Locate the largest adjacent final-mean jump along a lambda row.

    Declares a bifurcation only when that jump exceeds half the category
    separation; returns the midpoint of the jumping pair.  Symmetric in the
    direction of the lambda axis.
    """
    order = np.argsort(lambdas)
    lam = np.asarray(lambdas, dtype=float)[order]
    mean = np.asarray(means, dtype=float)[order]
    if lam.size < 4:
        raise InsufficientGrid(f"need >= 4 lambda points, got {lam.size}")
    jumps = np.abs(np.diff(mean))
    best = float(jumps.max())
    if not best > 0.5 * delta_mu:
        return None
    # ties resolve to the smallest midpoint, which reversing the axis preserves
    idx = int(np.flatnonzero(jumps == best)[0])
    return BifurcationFinding(lambda_star=float(0.5 * (lam[idx] + lam[idx + 1])), jump=best)


def detect_bifurcation(
    result: SweepResult, a: float, rule: TeacherRule
) -> Optional[BifurcationFinding]:
    """Bifurcation along the lambda axis for one (prior strength, rule) row.

    Replicates are averaged; cells that errored are excluded.
    """
    rows: dict[float, list[float]] = {}
    for rec in result.records:
        if rec.rule is rule and rec.a == a and rec.error is None:
            rows.setdefault(rec.lam, []).append(rec.final_mean)
    if not rows:
        raise InsufficientGrid(f"no usable cells for rule={rule.value}, a={a}")
    lambdas = np.array(sorted(rows))
    means = np.array([float(np.mean(rows[lam])) for lam in lambdas])
    return bifurcation_from_profile(lambdas, means, result.grid.model.delta_mu)
