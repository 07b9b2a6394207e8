#!/usr/bin/env python3
"""Run the five qualitative regimes of the endpoint-prior model.

Writes one trajectory CSV (+ thresholded density CSV) per (case, teacher
rule) into the output directory.  Desk-scale populations by default; pass
--full for the large single-teacher population.

Usage:
    python scripts/trajectory_regimes.py --out-dir results/trajectories
"""

import argparse
import csv
import os
from dataclasses import replace

from actuator.core import (
    ComplexQuadratic,
    LearningConfig,
    PhoneticModel,
    PopulationConfig,
    TeacherRule,
)
from actuator.numerics import bin_centers, thresholded_density
from actuator.simulate import FixedGenerations, Plateau, run

BASE = PhoneticModel(mu_a=730.0, mu_i=530.0, sigma_a=50.0, omega=0.0, lam=0.0)

# (name, a, lambda): strong/weak prior crossed with weak/strong channel bias
CASES = [
    ("stable_variation", 0.001, 0.25),
    ("rapid_umlaut", 0.001, 4.0),
    ("flat_prior_drift", 0.5, 0.0),
    ("split_population", 0.001, 1.3),
    ("gradual_umlaut", 0.01, 1.3),
]


def write_trajectory(traj, path):
    header = ["t", "mean", "var", "p05", "p95"] + [f"bin_{i:03d}" for i in range(200)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t, s in enumerate(traj.summaries):
            writer.writerow([t + 1, s.mean, s.var, s.p05, s.p95] + list(s.histogram))


def write_density(traj, path):
    centers = bin_centers(traj.bin_lo, traj.bin_hi)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "bin_center", "thresholded_density"])
        for t, s in enumerate(traj.summaries):
            for c, d in zip(centers, thresholded_density(s, traj.bin_lo, traj.bin_hi)):
                writer.writerow([t + 1, c, d])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results/trajectories")
    parser.add_argument("--seed", type=int, default=20240)
    parser.add_argument("--full", action="store_true",
                        help="full-scale populations (M=50000 single / 2500 multi)")
    parser.add_argument("--agents-single", type=int, help="override single-teacher M")
    parser.add_argument("--agents-multi", type=int, help="override multi-teacher M")
    parser.add_argument("--generations", type=int, help="override the fixed-length stop")
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    m_single = args.agents_single or (50000 if args.full else 10000)
    m_multi = args.agents_multi or (2500 if args.full else 2000)

    for name, a, lam in CASES:
        model = replace(BASE, lam=lam)
        learn = LearningConfig(n=100, prior=ComplexQuadratic(a=a))
        for rule in TeacherRule:
            single = rule is TeacherRule.ONE
            pop = PopulationConfig(
                M=m_single if single else m_multi,
                teachers=rule,
                seed=args.seed,
                start_mean=BASE.mu_a - 10.0,
                start_var=10.0,
            )
            if args.generations:
                stop = FixedGenerations(args.generations)
            else:
                stop = Plateau() if single else FixedGenerations(2500 if args.full else 1000)
            traj = run(model, learn, pop, stop)
            tag = f"{name}_{rule.value}"
            write_trajectory(traj, os.path.join(args.out_dir, f"{tag}.csv"))
            write_density(traj, os.path.join(args.out_dir, f"{tag}_density.csv"))
            last = traj.summaries[-1]
            print(
                f"{tag}: t={len(traj.summaries)} ({traj.stop_reason}), "
                f"mean={last.mean:.1f}, p05={last.p05:.1f}, p95={last.p95:.1f}"
            )


if __name__ == "__main__":
    main()
