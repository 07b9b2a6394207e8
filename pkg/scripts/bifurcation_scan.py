#!/usr/bin/env python3
"""Map the final population mean over (prior strength, channel bias).

Sweeps the endpoint-weighting prior and, for contrast, the Gaussian prior
over a lambda grid, then locates the critical channel bias per row.  The
endpoint prior with two or more teachers shows an abrupt jump; the Gaussian
prior never does.

Usage:
    python scripts/bifurcation_scan.py --out-dir results/bifurcation
"""

import argparse
import csv
import os

import numpy as np

from actuator.core import (
    ComplexQuadratic,
    LearningConfig,
    PhoneticModel,
    PopulationConfig,
    SimpleGaussian,
    TeacherRule,
)
from actuator.simulate import FixedGenerations
from actuator.sweep import SweepGrid, detect_bifurcation, run_sweep

BASE = PhoneticModel(mu_a=730.0, mu_i=530.0, sigma_a=50.0, omega=0.0, lam=0.0)


def write_records(path, records):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([
            "rule", "a", "lambda", "replicate",
            "final_mean", "final_var", "stop_reason", "generations", "seconds",
        ])
        for r in records:
            writer.writerow([
                r.rule.value, r.a, r.lam, r.replicate, r.final_mean, r.final_var,
                r.stop_reason, r.generations, round(r.seconds, 3),
            ])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results/bifurcation")
    parser.add_argument("--seed", type=int, default=31415)
    parser.add_argument("--agents", type=int, default=2000)
    parser.add_argument("--generations", type=int, default=1200)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--lambda-max", type=float, default=4.0)
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    lambdas = tuple(np.arange(0.0, args.lambda_max + 1e-9, 0.25))
    rules = (TeacherRule.TWO, TeacherRule.ALL)
    pop = PopulationConfig(
        M=args.agents, teachers=TeacherRule.TWO, seed=args.seed,
        start_mean=BASE.mu_a - 10.0, start_var=10.0,
    )

    endpoint = run_sweep(
        SweepGrid(
            a_values=(0.001, 0.002, 0.005, 0.01, 0.02, 0.05),
            lambda_values=lambdas, teacher_rules=rules, replicates=1,
            model=BASE, learn=LearningConfig(n=100, prior=ComplexQuadratic(a=0.001)),
            pop=pop, stop=FixedGenerations(args.generations),
        ),
        threads=args.threads,
    )
    write_records(os.path.join(args.out_dir, "endpoint_prior_sweep.csv"), endpoint.records)

    gaussian = run_sweep(
        SweepGrid(
            a_values=(5.0, 10.0, 25.0, 50.0),
            lambda_values=lambdas, teacher_rules=rules, replicates=1,
            model=BASE, learn=LearningConfig(n=100, prior=SimpleGaussian(tau=5.0)),
            pop=pop, stop=FixedGenerations(400),
        ),
        threads=args.threads,
    )
    write_records(os.path.join(args.out_dir, "gaussian_prior_sweep.csv"), gaussian.records)

    with open(os.path.join(args.out_dir, "critical_bias.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["prior", "rule", "strength", "lambda_star", "jump"])
        for result, label in ((endpoint, "endpoint"), (gaussian, "gaussian")):
            for a in result.grid.a_values:
                for rule in rules:
                    finding = detect_bifurcation(result, a=a, rule=rule)
                    if finding is None:
                        writer.writerow([label, rule.value, a, "none", ""])
                        print(f"{label} prior, {rule.value}, strength {a}: no jump")
                    else:
                        writer.writerow([label, rule.value, a, finding.lambda_star, finding.jump])
                        print(
                            f"{label} prior, {rule.value}, strength {a}: "
                            f"lambda* = {finding.lambda_star:.2f} (jump {finding.jump:.0f} Hz)"
                        )


if __name__ == "__main__":
    main()
