"""Tests for simulated designs and Monte Carlo studies."""

import numpy as np
import pytest
from pydantic import ValidationError

from plvc_quantile.models.errors import ArgumentError, ReplicateFailureError
from plvc_quantile.models.inference import TestMethod
from plvc_quantile.models.simulation import SimulationConfig, StudyTest
from plvc_quantile.services.simulation import (
    LCC_ALPHA,
    _check_failures,
    alpha_functions,
    gen_dataset,
    marginal_quantile,
    mc_level_power,
    mc_mse,
    mc_power_curve,
    measurement_times,
    replicate_rng,
)


class TestRandomStreams:
    """Tests for per-replicate generators and visit times."""

    def test_should_reproduce_a_stream_for_the_same_seed_and_replicate(self):
        # Act
        first = replicate_rng(4, 2).random(5)
        second = replicate_rng(4, 2).random(5)

        # Assert
        np.testing.assert_array_equal(first, second)

    def test_should_separate_replicates_of_one_seed(self):
        # Act / Assert
        assert not np.array_equal(replicate_rng(4, 0).random(5), replicate_rng(4, 1).random(5))

    @pytest.mark.parametrize("seed", range(20))
    def test_should_keep_baseline_visit_and_jitter_the_rest(self, seed):
        # Act
        times = measurement_times(replicate_rng(seed, 0))

        # Assert
        assert times[0] == 0.0
        assert 1 <= times.size <= 11
        assert np.all(np.diff(times) > 0)
        assert np.all(times[1:] >= 0.5)
        assert np.all(times <= 10.5)


class TestTruth:
    """Tests for the true coefficient functions and error quantiles."""

    def test_should_return_constants_for_lcc_truth(self):
        # Act
        alpha = alpha_functions(np.array([0.0, 3.0, 9.0]), "lcc")

        # Assert
        np.testing.assert_array_equal(alpha, np.tile(LCC_ALPHA, (3, 1)))

    def test_should_make_alpha1_constant_without_departure(self):
        # Act
        alpha = alpha_functions(np.linspace(0, 10, 11), "constancy", eta=0.0)

        # Assert
        np.testing.assert_allclose(alpha[:, 1], 2.0)

    def test_should_evaluate_plvc_curves(self):
        # Act
        alpha = alpha_functions(np.array([0.0, 20.0 / 3.0]))

        # Assert
        assert alpha[0, 0] == pytest.approx(15.0)
        assert alpha[0, 2] == pytest.approx(6.0)
        assert alpha[1, 3] == pytest.approx(-4.0)

    @pytest.mark.parametrize(
        "case, tau, expected",
        [(1, 0.5, 0.0), (2, 0.25, -0.6745), (3, 0.25, -0.7649), (3, 0.5, 0.0)],
    )
    def test_should_return_error_marginal_quantiles(self, case, tau, expected):
        # Act / Assert
        assert marginal_quantile(case, tau) == pytest.approx(expected, abs=1e-4)

    def test_should_reject_unknown_case(self):
        # Act / Assert
        with pytest.raises(ArgumentError, match="case"):
            marginal_quantile(4, 0.5)


class TestGenDataset:
    """Tests for one simulated dataset."""

    def test_should_be_deterministic_for_config_and_replicate(self, small_config):
        # Act
        first = gen_dataset(small_config, 3).dataset
        second = gen_dataset(small_config, 3).dataset

        # Assert
        np.testing.assert_array_equal(first.y, second.y)
        np.testing.assert_array_equal(first.x, second.x)

    def test_should_lay_out_covariates_and_subjects(self, small_config):
        # Act
        sim = gen_dataset(small_config, 0)

        # Assert
        ds = sim.dataset
        assert ds.n == small_config.n
        assert ds.varying_names == ("intercept", "x1", "x2", "x3")
        assert ds.constant_names == ("z",)
        assert ds.subject_ids[0] == "s0000"
        assert sim.alpha_true.shape == (ds.n_obs, 4)
        assert set(np.unique(ds.z)) <= {0.0, 1.0}

    @pytest.mark.parametrize("tau", [0.25, 0.5])
    def test_should_place_the_linear_predictor_at_the_tau_quantile(self, tau):
        # Arrange
        config = SimulationConfig(case=1, n=400, tau=tau, beta=1.0, seed=2)

        # Act
        sim = gen_dataset(config, 0)

        # Assert
        ds = sim.dataset
        predictor = np.sum(ds.x * sim.alpha_true, axis=1) + ds.z @ sim.beta_true
        assert np.mean(ds.y < predictor) == pytest.approx(tau, abs=0.1)


def _within_subject_pairs(sim) -> tuple[np.ndarray, np.ndarray]:
    """Error products and time lags over distinct within-subject row pairs."""
    products: list[np.ndarray] = []
    lags: list[np.ndarray] = []
    for rows in sim.dataset.groups:
        e = sim.errors[rows]
        t = sim.dataset.time[rows]
        j, k = np.triu_indices(e.size, k=1)
        products.append(e[j] * e[k])
        lags.append(np.abs(t[j] - t[k]))
    return np.concatenate(products), np.concatenate(lags)


class TestErrorDesign:
    """Tests for visit counts and the within-subject error structure."""

    def test_should_average_nine_visits_per_subject(self):
        # Arrange
        config = SimulationConfig(case=1, n=2000, reps=1, seed=5, knots=1)

        # Act
        ds = gen_dataset(config, 0).dataset

        # Assert
        assert ds.m.mean() == pytest.approx(9.0, abs=0.1)
        assert ds.m.min() >= 1
        assert ds.m.max() <= 11

    def test_should_give_exchangeable_errors_unit_variance_and_common_correlation(self):
        # Arrange
        config = SimulationConfig(case=1, n=2000, rho=0.8, reps=1, seed=6, knots=1)

        # Act
        sim = gen_dataset(config, 0)
        products, _ = _within_subject_pairs(sim)

        # Assert
        assert np.mean(sim.errors**2) == pytest.approx(1.0, abs=0.1)
        assert products.mean() == pytest.approx(0.8, abs=0.05)

    def test_should_decay_ar1_correlation_with_time_lag(self):
        # Arrange
        config = SimulationConfig(case=2, n=2000, rho=0.8, reps=1, seed=7, knots=1)

        # Act
        sim = gen_dataset(config, 0)
        products, lags = _within_subject_pairs(sim)
        near = (lags > 0.5) & (lags < 1.5)
        far = lags > 6.0

        # Assert
        assert products[near].mean() == pytest.approx(np.mean(0.8 ** lags[near]), abs=0.05)
        assert products[far].mean() == pytest.approx(np.mean(0.8 ** lags[far]), abs=0.05)
        assert products[far].mean() < products[near].mean() - 0.3

    @pytest.mark.parametrize("case", [1, 3])
    def test_should_keep_normal_sign_concordance_for_exchangeable_cases(self, case):
        # Arrange
        config = SimulationConfig(case=case, n=1000, rho=0.8, reps=1, seed=8, knots=1)
        expected = 0.5 + np.arcsin(0.8) / np.pi

        # Act
        products, _ = _within_subject_pairs(gen_dataset(config, 0))

        # Assert
        assert np.mean(products > 0) == pytest.approx(expected, abs=0.03)


class TestMonteCarlo:
    """Tests for level/power and MSE studies on small designs."""

    def test_should_reproduce_rejection_counts(self, small_config):
        # Arrange
        test = StudyTest(methods=[TestMethod.QRS, TestMethod.WALD])

        # Act
        first = mc_level_power(small_config, test, n_jobs=1)
        second = mc_level_power(small_config, test, n_jobs=1)

        # Assert
        assert first.to_dict() == second.to_dict()
        assert [r.method for r in first.rates] == ["qrs", "wald"]
        assert all(r.trials <= small_config.reps for r in first.rates)

    @pytest.mark.slow
    def test_should_not_depend_on_worker_count(self, small_config):
        # Arrange
        test = StudyTest(methods=[TestMethod.QRS])

        # Act
        serial = mc_level_power(small_config, test, n_jobs=1)
        parallel = mc_level_power(small_config, test, n_jobs=2)

        # Assert
        assert serial.to_dict() == parallel.to_dict()

    def test_should_sweep_eta_for_constancy_curve(self, small_config):
        # Act
        reports = mc_power_curve(
            small_config.model_copy(update={"reps": 2}), None, "constancy", [0.0, 1.0], n_jobs=1
        )

        # Assert
        assert [r.value for r in reports] == [0.0, 1.0]
        assert all(r.study == "power-curve" and r.target == "constancy" for r in reports)
        assert all(r.config.truth == "constancy" for r in reports)
        assert "wald" not in {rate.method for rate in reports[0].rates}

    def test_should_reject_unknown_curve_target(self, small_config):
        # Act / Assert
        with pytest.raises(ArgumentError, match="target"):
            mc_power_curve(small_config, None, "rho", [0.1])

    def test_should_summarize_both_estimators(self, small_config):
        # Act
        report = mc_mse(small_config.model_copy(update={"reps": 2}), n_jobs=1)

        # Assert
        assert [e.estimator for e in report.estimators] == ["plvc", "lcc"]
        assert all(len(e.alpha_mse) == 4 for e in report.estimators)
        assert report.failures == 0

    def test_should_reject_unknown_estimator(self, small_config):
        # Act / Assert
        with pytest.raises(ArgumentError, match="Estimators"):
            mc_mse(small_config, ["ols"])

    def test_should_abort_when_too_many_replicates_fail(self):
        # Act / Assert
        with pytest.raises(ReplicateFailureError):
            _check_failures(2, 10)
        _check_failures(0, 10)

    def test_should_refuse_wald_for_constancy_hypothesis(self):
        # Act / Assert
        with pytest.raises(ValidationError):
            StudyTest(hypothesis="constancy", methods=[TestMethod.WALD])
