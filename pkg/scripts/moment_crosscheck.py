#!/usr/bin/env python3
"""Monte Carlo vs closed-form moments for every tractable configuration.

For each (prior family, teacher rule), iterates the exact mean/variance
recurrences alongside a finite-population simulation and prints the worst
deviation in propagated-SE units.

Usage:
    python scripts/moment_crosscheck.py --agents 2000 --generations 200
"""

import argparse
import math

import numpy as np

from actuator import analytic as an
from actuator.core import (
    LearningConfig,
    MomentState,
    Naive,
    PhoneticModel,
    PopulationConfig,
    SimpleGaussian,
    TeacherRule,
)
from actuator.simulate import FixedGenerations, run

BASE = PhoneticModel(mu_a=730.0, mu_i=530.0, sigma_a=50.0, omega=0.0, lam=0.25)
RULE_M = {TeacherRule.ONE: 1.0, TeacherRule.TWO: 2.0, TeacherRule.ALL: math.inf}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--agents", type=int, default=2000)
    parser.add_argument("--generations", type=int, default=200)
    parser.add_argument("--seed", type=int, default=314)
    parser.add_argument("--n", type=int, default=100)
    parser.add_argument("--tau", type=float, default=5.0)
    args = parser.parse_args()

    priors = [("naive", Naive()), ("simple", SimpleGaussian(tau=args.tau))]
    T, M = args.generations, args.agents
    print(f"M={M}, T={T}, lambda={BASE.lam}, n={args.n}")
    for family, prior in priors:
        learn = LearningConfig(n=args.n, prior=prior)
        for rule, m in RULE_M.items():
            pop = PopulationConfig(
                M=M, teachers=rule, seed=args.seed,
                start_mean=BASE.mu_a - 10.0, start_var=10.0,
            )
            traj = run(BASE, learn, pop, FixedGenerations(T))
            kind = an.RecurrenceKind(family, m)
            moments = an.trajectory_moments(
                kind, MomentState(pop.start_mean, pop.start_var), BASE, learn, T
            )
            mean_se, var_se = an.propagated_moment_se(
                kind, pop.start_var, BASE, learn, M, T
            )
            mean_dev = np.abs(traj.means() - [s.mean for s in moments]) / mean_se
            var_dev = np.abs(traj.variances() - [s.var for s in moments]) / var_se
            flag = "ok" if max(mean_dev.max(), var_dev.max()) <= 4.0 else "DEVIATES"
            print(
                f"  {family:6s} {rule.value:4s}: worst mean dev {mean_dev.max():.2f} SE, "
                f"worst var dev {var_dev.max():.2f} SE  [{flag}]"
            )


if __name__ == "__main__":
    main()
