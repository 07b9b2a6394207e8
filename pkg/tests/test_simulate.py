import math
from dataclasses import replace

import numpy as np
import pytest

from actuator import analytic as an
from actuator import simulate as sm
from actuator.core import (
    ComplexQuadratic,
    LearningConfig,
    MomentState,
    Naive,
    PhoneticModel,
    PopulationConfig,
    SimpleGaussian,
    TeacherRule,
)
from actuator.numerics import RngStream

MODEL = PhoneticModel(mu_a=730.0, mu_i=530.0, sigma_a=50.0, omega=0.0, lam=0.0)


def pop_of(M=1000, rule=TeacherRule.ALL, seed=1, start_mean=720.0, start_var=10.0):
    return PopulationConfig(M=M, teachers=rule, seed=seed, start_mean=start_mean, start_var=start_var)


class TestInitPopulation:
    def test_degenerate_start(self):
        learn = LearningConfig(n=100, prior=Naive())
        state = sm.init_population(pop_of(M=50, start_var=0.0), MODEL, learn, RngStream(3))
        assert state.t == 1
        assert np.all(state.c_values == 720.0)

    def test_start_mean_recovered(self):
        learn = LearningConfig(n=100, prior=Naive())
        state = sm.init_population(pop_of(M=10**5), MODEL, learn, RngStream(4))
        assert abs(state.c_values.mean() - 720.0) <= 0.03  # 3 SE, SE = sqrt(10/1e5)

    def test_complex_prior_clamps(self):
        learn = LearningConfig(n=100, prior=ComplexQuadratic(a=0.01))
        pop = pop_of(M=10**4, start_mean=730.0, start_var=25.0)
        state = sm.init_population(pop, MODEL, learn, RngStream(5))
        assert state.c_values.max() <= MODEL.mu_a
        assert state.c_values.min() >= MODEL.mu_i


class TestProduceBatch:
    def test_noiseless_channel(self):
        model = replace(MODEL, sigma_a=1e-300, lam=0.25)
        batch = sm.produce_batch(np.full(10, 730.0), model, RngStream(6))
        assert np.all(batch.values == pytest.approx(729.75, abs=1e-12))

    def test_single_teacher_mean(self):
        model = replace(MODEL, lam=0.25)
        batch = sm.produce_batch(np.full(10**5, 730.0), model, RngStream(7))
        assert abs(batch.mean - 729.75) <= 0.5  # 3 SE ~ 0.47

    def test_balanced_mixture_mean(self):
        teachers = np.concatenate([np.full(50_000, 530.0), np.full(50_000, 730.0)])
        batch = sm.produce_batch(teachers, MODEL, RngStream(8))
        assert abs(batch.mean - 630.0) <= 1.0

    def test_determinism(self):
        a = sm.produce_batch(np.full(5, 700.0), MODEL, RngStream(9, t=2, learner=3))
        b = sm.produce_batch(np.full(5, 700.0), MODEL, RngStream(9, t=2, learner=3))
        assert np.array_equal(a.values, b.values)


class TestStepGeneration:
    def test_noiseless_naive_decrement(self):
        model = PhoneticModel(730.0, 530.0, 1e-300, 0.0, 0.25)
        learn = LearningConfig(n=10, prior=Naive())
        pop = pop_of(M=100, rule=TeacherRule.TWO, start_var=0.0, start_mean=700.0)
        state = sm.init_population(pop, model, learn, RngStream(pop.seed, 0, 0, 0))
        nxt = sm.step_generation(state, model, learn, pop, pop.seed)
        assert nxt.t == 2
        assert np.allclose(nxt.c_values, 699.75, atol=1e-10)

    def test_simple_prior_reaches_fixed_point(self):
        model = replace(MODEL, lam=0.25)
        learn = LearningConfig(n=100, prior=SimpleGaussian(tau=5.0))
        pop = pop_of(M=2000, rule=TeacherRule.ALL, seed=21)
        traj = sm.run(model, learn, pop, sm.FixedGenerations(200))
        assert abs(traj.summaries[-1].mean - 729.75) <= 0.3

    def test_complex_strong_bias_reaches_low_vowel(self):
        model = replace(MODEL, lam=4.0)
        learn = LearningConfig(n=100, prior=ComplexQuadratic(a=0.001))
        pop = pop_of(M=2000, rule=TeacherRule.TWO, seed=22)
        traj = sm.run(model, learn, pop, sm.FixedGenerations(1000))
        means = traj.means()
        assert np.any(np.abs(means - MODEL.mu_i) <= 20.0)
        assert abs(means[-1] - MODEL.mu_i) <= 20.0

    def test_all_rules_run(self):
        learn = LearningConfig(n=10, prior=Naive())
        for rule in TeacherRule:
            pop = pop_of(M=200, rule=rule, seed=23)
            state = sm.init_population(pop, MODEL, learn, RngStream(pop.seed, 0, 0, 0))
            nxt = sm.step_generation(state, MODEL, learn, pop, pop.seed)
            assert nxt.c_values.shape == (200,)


class TestRun:
    def test_fixed_one_generation(self):
        learn = LearningConfig(n=10, prior=Naive())
        traj = sm.run(MODEL, learn, pop_of(M=100), sm.FixedGenerations(1))
        assert len(traj.summaries) == 1
        assert traj.stop_reason == "fixed_T"
        assert traj.final_state.t == 1

    def test_plateau_on_static_population(self):
        # nothing changes: plateau must fire at exactly window+1 generations
        model = PhoneticModel(730.0, 530.0, 1e-12, 0.0, 0.0)
        learn = LearningConfig(n=10, prior=Naive())
        pop = pop_of(M=100, start_var=0.0, start_mean=700.0)
        traj = sm.run(model, learn, pop, sm.Plateau(window=5, delta=2.0, cap=50))
        assert traj.stop_reason == "converged"
        assert len(traj.summaries) == 6

    def test_cap_reached(self):
        model = replace(MODEL, lam=5.0)  # runaway drift never plateaus
        learn = LearningConfig(n=10, prior=Naive())
        traj = sm.run(model, learn, pop_of(M=100), sm.Plateau(window=10, delta=0.5, cap=30))
        assert traj.stop_reason == "cap_reached"
        assert len(traj.summaries) == 30

    def test_single_teacher_complex_stays_near_start(self):
        learn = LearningConfig(n=100, prior=ComplexQuadratic(a=0.001))
        model = replace(MODEL, lam=0.25)
        pop = pop_of(M=2000, rule=TeacherRule.ONE, seed=24)
        traj = sm.run(model, learn, pop, sm.Plateau(window=200, delta=2.0, cap=3000))
        assert traj.stop_reason == "converged"
        assert abs(traj.summaries[-1].mean - 720.0) <= 40.0

    def test_summary_count_matches_final_generation_index(self):
        learn = LearningConfig(n=10, prior=Naive())
        for stop in (sm.FixedGenerations(17), sm.Plateau(window=3, delta=1000.0, cap=20)):
            traj = sm.run(MODEL, learn, pop_of(M=100, seed=31), stop)
            assert traj.final_state.t == len(traj.summaries)

    def test_seed_reproducibility(self):
        learn = LearningConfig(n=20, prior=Naive())
        t1 = sm.run(MODEL, learn, pop_of(M=300, seed=55), sm.FixedGenerations(40))
        t2 = sm.run(MODEL, learn, pop_of(M=300, seed=55), sm.FixedGenerations(40))
        assert np.array_equal(t1.final_state.c_values, t2.final_state.c_values)
        assert t1.means().tolist() == t2.means().tolist()

    def test_rejects_invalid_config(self):
        learn = LearningConfig(n=1, prior=Naive())
        with pytest.raises(Exception):
            sm.run(MODEL, learn, pop_of(), sm.FixedGenerations(5))


class TestInvariants:
    def test_complex_population_always_in_range(self):
        model = replace(MODEL, lam=1.3)
        learn = LearningConfig(n=100, prior=ComplexQuadratic(a=0.01))
        pop = pop_of(M=500, rule=TeacherRule.ONE, seed=77, start_mean=729.0)
        state = sm.init_population(pop, model, learn, RngStream(pop.seed, 0, 0, 0))
        for _ in range(300):
            state = sm.step_generation(state, model, learn, pop, pop.seed)
            assert state.c_values.min() >= MODEL.mu_i
            assert state.c_values.max() <= MODEL.mu_a

    def test_naive_two_vs_all_stable_variance_ratio(self):
        model = PhoneticModel(730.0, 530.0, math.sqrt(60.0), 5.0, 0.0)
        learn = LearningConfig(n=10, prior=Naive())
        stable = {}
        for rule in (TeacherRule.TWO, TeacherRule.ALL):
            pop = pop_of(M=5000, rule=rule, seed=99)
            traj = sm.run(model, learn, pop, sm.FixedGenerations(200))
            stable[rule] = traj.variances()[-50:].mean()
        ratio = stable[TeacherRule.TWO] / stable[TeacherRule.ALL]
        assert 2.0 * 0.75 <= ratio <= 2.0 * 1.25

    @pytest.mark.parametrize("prior,family", [(Naive(), "naive"), (SimpleGaussian(tau=5.0), "simple")])
    @pytest.mark.parametrize("rule,m", [
        (TeacherRule.ONE, 1.0), (TeacherRule.TWO, 2.0), (TeacherRule.ALL, math.inf),
    ])
    def test_moments_track_analytic_within_4_se(self, prior, family, rule, m):
        model = replace(MODEL, lam=0.25)
        learn = LearningConfig(n=100, prior=prior)
        pop = pop_of(M=2000, rule=rule, seed=314)
        T = 200
        traj = sm.run(model, learn, pop, sm.FixedGenerations(T))
        kind = an.RecurrenceKind(family, m)
        moments = an.trajectory_moments(kind, MomentState(720.0, 10.0), model, learn, T)
        mean_se, var_se = an.propagated_moment_se(kind, 10.0, model, learn, pop.M, T)
        mean_dev = np.abs(traj.means() - [s.mean for s in moments]) / mean_se
        var_dev = np.abs(traj.variances() - [s.var for s in moments]) / var_se
        assert mean_dev.max() <= 4.0
        assert var_dev.max() <= 4.0


class TestSufficientStatisticPath:
    def test_batch_mean_distribution_matches_full_batches(self):
        # the engine draws ybar directly; its law must match full batches
        model = replace(MODEL, lam=0.5)
        n, reps = 25, 4000
        c_teacher = 700.0
        full = np.array([
            sm.produce_batch(np.full(n, c_teacher), model, RngStream(1, t=1, learner=i)).mean
            for i in range(reps)
        ])
        pop = pop_of(M=reps, rule=TeacherRule.ONE, start_mean=c_teacher, start_var=0.0)
        learn = LearningConfig(n=n, prior=Naive())
        state = sm.init_population(pop, model, learn, RngStream(pop.seed, 0, 0, 0))
        engine = sm.step_generation(state, model, learn, pop, pop.seed).c_values
        # same mean and variance to sampling accuracy
        se_mean = math.sqrt(model.noise_var / n / reps)
        assert abs(full.mean() - engine.mean()) <= 4 * math.sqrt(2) * se_mean
        v_expect = model.noise_var / n
        assert abs(full.var() - v_expect) <= 4 * v_expect * math.sqrt(2.0 / reps)
        assert abs(engine.var() - v_expect) <= 4 * v_expect * math.sqrt(2.0 / reps)
