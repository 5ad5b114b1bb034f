import math

import numpy as np
import pytest

import carate as c
from carate.crossfit import FitMatrix

from conftest import make_constant_spec, make_linear_effect_spec, simulate_frame


def true_fit_matrix(spec, frame):
    return FitMatrix(np.column_stack([spec.mean(0, frame.z), spec.mean(1, frame.z)]))


class TestEif:
    def test_reduces_to_two_y(self):
        assert c.eif(3.0, 1, 0.5, 0.0, 0.0, 0.0) == pytest.approx(6.0)
        assert c.eif(5.0, 0, 0.5, 0.0, 0.0, 0.0) == pytest.approx(-10.0)

    def test_hand_value(self):
        assert c.eif(2.0, 1, 0.5, 0.0, 1.0, 1.0) == pytest.approx(2.0)

    def test_vectorized(self):
        out = c.eif(np.array([3.0, 5.0]), np.array([1, 0]), 0.5, 0.0, 0.0, 0.0)
        np.testing.assert_allclose(out, [6.0, -10.0])

    def test_propensity_bounds(self):
        with pytest.raises(ValueError):
            c.eif(1.0, 1, 1.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            c.eif(1.0, 1, 0.0, 0.0, 0.0, 0.0)

    def test_mean_zero_at_truth(self):
        spec = c.make_dgp("dgp2")
        strata = c.builtin_strata(5)
        pi = c.builtin_proportions(5, "varying")
        n = 200_000
        sample = c.sample_population(spec, n, 42)
        labels = strata.classify(sample.z)
        a = c.assign_ssra(labels, pi, 43)
        frame = c.realize_outcomes(sample, labels, a)
        phi = c.eif(frame.observed_y, frame.assignments, pi.by_unit(labels),
                    spec.mean_fn(0, frame.z), spec.mean_fn(1, frame.z), spec.true_ate)
        se = phi.std(ddof=1) / math.sqrt(n)
        assert abs(phi.mean()) < 4 * se

    def test_variance_matches_bound_oracle(self):
        spec = c.make_dgp("dgp1")
        strata = c.builtin_strata(5)
        pi = c.builtin_proportions(5, "constant")
        n = 200_000
        sample = c.sample_population(spec, n, 7)
        labels = strata.classify(sample.z)
        a = c.assign_ssra(labels, pi, 8)
        frame = c.realize_outcomes(sample, labels, a)
        phi = c.eif(frame.observed_y, frame.assignments, pi.by_unit(labels),
                    spec.mean_fn(0, frame.z), spec.mean_fn(1, frame.z), spec.true_ate)
        v_star, se = c.speb_oracle(spec, strata, pi, draws=200_000, seed=9)
        assert abs(phi.var(ddof=1) - v_star) / v_star < 0.02


class TestSat:
    def test_hand_example(self, small_frame):
        rec = c.est_sat(small_frame)
        assert rec.value == pytest.approx(-0.8)
        assert rec.estimator == "sat"
        assert not rec.degenerate

    def test_constant_outcomes_give_zero(self):
        z = np.linspace(-0.99, 0.99, 40).reshape(-1, 1)
        sample = c.PotentialSample(y0=np.full(40, 3.0), y1=np.full(40, 3.0), z=z)
        labels = c.builtin_strata(5).classify(z)
        a = np.tile([0, 1], 20)
        rec = c.est_sat(c.realize_outcomes(sample, labels, a))
        assert rec.value == 0.0

    def test_single_stratum_is_difference_of_means(self):
        rng = np.random.default_rng(1)
        y = rng.normal(size=100)
        a = rng.integers(0, 2, size=100)
        frame = c.ExperimentFrame(z=np.zeros((100, 1)), labels=np.ones(100, dtype=int),
                                  assignments=a, observed_y=y)
        rec = c.est_sat(frame)
        assert rec.value == pytest.approx(y[a == 1].mean() - y[a == 0].mean())

    def test_empty_cell_flagged_not_raised(self):
        frame = c.ExperimentFrame(z=np.zeros((3, 1)), labels=np.array([1, 1, 2]),
                                  assignments=np.array([1, 0, 1]),
                                  observed_y=np.array([1.0, 3.0, 5.0]))
        rec = c.est_sat(frame)
        assert rec.degenerate
        assert any("a=0,s=2" in f for f in rec.flags)
        # the empty control cell contributes a zero mean
        assert rec.value == pytest.approx((2 / 3) * (1 - 3) + (1 / 3) * (5 - 0))


class TestImp:
    def test_perfect_imputation_recovers_sample_effect(self):
        spec, strata, pi, frame = simulate_frame(n=500, seed=3)
        fits = FitMatrix(np.column_stack([frame.sample.y0, frame.sample.y1]))
        rec = c.est_imp(frame, fits)
        assert rec.value == pytest.approx(float(np.mean(frame.sample.y1 - frame.sample.y0)),
                                          abs=1e-12)

    def test_all_treated_with_zero_fits(self):
        y = np.array([2.0, 4.0, 9.0])
        frame = c.ExperimentFrame(z=np.zeros((3, 1)), labels=np.ones(3, dtype=int),
                                  assignments=np.ones(3, dtype=int), observed_y=y)
        rec = c.est_imp(frame, FitMatrix(np.zeros((3, 2))))
        assert rec.value == pytest.approx(y.mean())

    def test_hand_example(self, small_frame):
        rec = c.est_imp(small_frame, FitMatrix(np.zeros((5, 2))))
        assert rec.value == pytest.approx(0.4)

    def test_alignment_checked(self, small_frame):
        with pytest.raises(ValueError, match="length"):
            c.est_imp(small_frame, FitMatrix(np.zeros((4, 2))))


class TestAipwInfeasible:
    def test_noiseless_equals_mean_effect(self):
        spec = make_linear_effect_spec()
        noiseless = c.PopulationSpec(
            dim_k=1, mean_fn=spec.mean_fn,
            scale_fn=lambda a, z: np.zeros(z.shape[0]),
            covariate_sampler=spec.covariate_sampler,
            noise_sampler=spec.noise_sampler, true_ate=0.0)
        sample = c.sample_population(noiseless, 300, 5)
        labels = c.builtin_strata(5).classify(sample.z)
        pi = c.builtin_proportions(5, "constant")
        a = c.assign_spbr(labels, pi, 6)
        frame = c.realize_outcomes(sample, labels, a)
        rec = c.est_aipw_infeasible(frame, noiseless, pi)
        effect = noiseless.mean_fn(1, frame.z) - noiseless.mean_fn(0, frame.z)
        assert rec.value == pytest.approx(float(effect.mean()), abs=1e-12)

    def test_constant_unit_effect(self):
        spec = make_constant_spec(m0=0.0, m1=1.0, s0=0.0, s1=0.0)
        sample = c.sample_population(spec, 100, 1)
        labels = np.ones(100, dtype=int)
        pi = c.constant_proportions(1, 0.5)
        a = c.assign_spbr(labels, pi, 2)
        rec = c.est_aipw_infeasible(c.realize_outcomes(sample, labels, a), spec, pi)
        assert rec.value == pytest.approx(1.0)


class TestFeasibleIdentities:
    def test_true_fits_true_pi_equals_infeasible_bitwise(self):
        spec, strata, pi, frame = simulate_frame("dgp2", n=700, proportions="varying", seed=21)
        feas = c.est_aipw_feasible(frame, true_fit_matrix(spec, frame), pi, c.TRUE_PI)
        infeas = c.est_aipw_infeasible(frame, spec, pi)
        assert feas.value == infeas.value

    def test_zero_fits_sample_pi_equals_sat(self):
        spec, strata, pi, frame = simulate_frame("dgp1", n=900, mechanism="ssra", seed=22)
        feas = c.est_aipw_feasible(frame, FitMatrix(np.zeros((frame.n, 2))),
                                   pi, c.SAMPLE_PROPORTIONS)
        sat = c.est_sat(frame)
        assert feas.value == pytest.approx(sat.value, rel=1e-12, abs=1e-13)

    def test_degenerate_sample_propensity_raises(self):
        frame = c.ExperimentFrame(z=np.zeros((4, 1)), labels=np.array([1, 1, 2, 2]),
                                  assignments=np.array([1, 0, 1, 1]),
                                  observed_y=np.ones(4))
        pi = c.constant_proportions(2, 0.5)
        with pytest.raises(c.DegeneratePropensityError, match="stratum 2"):
            c.est_aipw_feasible(frame, FitMatrix(np.zeros((4, 2))), pi, c.SAMPLE_PROPORTIONS)

    def test_unknown_mode(self, small_frame):
        with pytest.raises(ValueError, match="propensity mode"):
            c.est_aipw_feasible(small_frame, FitMatrix(np.zeros((5, 2))),
                                c.constant_proportions(2, 0.5), "plugin")


class TestTranslationEquivariance:
    def test_all_estimators_shift_invariant(self):
        shift = 1234.5
        spec, strata, pi, frame = simulate_frame("dgp1", n=600, seed=30)
        plan = c.make_folds(frame.labels, frame.assignments, 2, 31)
        fits = c.crossfit_mhat(frame, plan, c.KernelSpec(c.default_bandwidth_const(1)))

        shifted_sample = c.PotentialSample(y0=frame.sample.y0 + shift,
                                           y1=frame.sample.y1 + shift, z=frame.z)
        frame2 = c.realize_outcomes(shifted_sample, frame.labels, frame.assignments)
        fits2 = FitMatrix(fits.mhat + shift)
        shifted_spec = c.PopulationSpec(
            dim_k=1,
            mean_fn=lambda a, z, f=spec.mean_fn: f(a, z) + shift,
            scale_fn=spec.scale_fn, covariate_sampler=spec.covariate_sampler,
            noise_sampler=spec.noise_sampler, true_ate=spec.true_ate)

        tol = dict(rel=1e-9, abs=1e-9)
        assert c.est_sat(frame2).value == pytest.approx(c.est_sat(frame).value, **tol)
        assert c.est_imp(frame2, fits2).value == pytest.approx(
            c.est_imp(frame, fits).value, **tol)
        assert c.est_aipw_infeasible(frame2, shifted_spec, pi).value == pytest.approx(
            c.est_aipw_infeasible(frame, spec, pi).value, **tol)
        assert c.est_aipw_feasible(frame2, fits2, pi).value == pytest.approx(
            c.est_aipw_feasible(frame, fits, pi).value, **tol)


class TestRemainderDecomposition:
    def test_true_pi_kills_propensity_terms(self):
        spec, strata, pi, frame = simulate_frame("dgp1", n=500, seed=40)
        plan = c.make_folds(frame.labels, frame.assignments, 2, 41)
        fits = c.crossfit_mhat(frame, plan, c.KernelSpec(c.default_bandwidth_const(1)))
        dec = c.remainder_decomposition(frame, fits, spec, pi, c.TRUE_PI)
        assert dec.r1_tilde == 0.0
        assert dec.r0_tilde == 0.0

    def test_true_fits_kill_regression_terms(self):
        spec, strata, pi, frame = simulate_frame("dgp2", n=500, seed=42)
        dec = c.remainder_decomposition(frame, true_fit_matrix(spec, frame), spec, pi,
                                        c.SAMPLE_PROPORTIONS)
        assert dec.r1 == 0.0
        assert dec.r0 == 0.0

    @pytest.mark.parametrize("mode", [c.TRUE_PI, c.SAMPLE_PROPORTIONS])
    def test_identity_residual_vanishes(self, mode):
        spec, strata, pi, frame = simulate_frame("dgp1", n=2000,
                                                 proportions="varying", seed=43)
        plan = c.make_folds(frame.labels, frame.assignments, 3, 44)
        fits = c.crossfit_mhat(frame, plan, c.KernelSpec(c.default_bandwidth_const(1)))
        dec = c.remainder_decomposition(frame, fits, spec, pi, mode)
        assert abs(dec.identity_residual) < 1e-8 * math.sqrt(frame.n)

    def test_remainders_shrink_with_n(self):
        spec = c.make_dgp("dgp1")
        strata = c.builtin_strata(5)
        pi = c.builtin_proportions(5, "constant")
        kern = c.KernelSpec(c.default_bandwidth_const(1))
        med = {}
        for n in (500, 8000):
            reps = []
            for rep in range(60):
                sample = c.sample_population(spec, n, c.derive_seed(50, n, rep, 0))
                labels = strata.classify(sample.z)
                a = c.assign_spbr(labels, pi, c.derive_seed(50, n, rep, 1))
                frame = c.realize_outcomes(sample, labels, a)
                plan = c.make_folds(labels, a, 2, c.derive_seed(50, n, rep, 2))
                fits = c.crossfit_mhat(frame, plan, kern)
                dec = c.remainder_decomposition(frame, fits, spec, pi, c.SAMPLE_PROPORTIONS)
                reps.append(max(abs(dec.r1), abs(dec.r0)))
            med[n] = float(np.median(reps))
        assert med[8000] < med[500]
