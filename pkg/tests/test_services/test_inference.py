"""Tests for residualization, rank score and Wald tests."""

import math
from dataclasses import replace

import numpy as np
import pytest

from plvc_quantile.models.data import LongitudinalDataset
from plvc_quantile.models.errors import (
    ArgumentError,
    DegenerateDesignError,
    IllConditionedError,
    NoPairsError,
)
from plvc_quantile.models.inference import Correlation, DensityWeights, TestMethod, WeightMode
from plvc_quantile.services import inference
from plvc_quantile.services.inference import (
    constancy_test,
    estimate_delta,
    hypothesis_table,
    rank_score_beta,
    rank_score_statistic,
    residualize,
    wald_statistic,
    wald_test,
)
from plvc_quantile.services.solver import psi
from plvc_quantile.splines import make_spec


def grouped(n_subjects: int, size: int) -> list[slice]:
    return [slice(i * size, (i + 1) * size) for i in range(n_subjects)]


def shifted_dataset(effect: float, seed: int = 21) -> LongitudinalDataset:
    """25 subjects, 6 visits, y = 1 + x + effect * z + noise with a binary subject-level z."""
    rng = np.random.default_rng(seed)
    n, m = 25, 6
    subject = np.repeat(np.arange(n), m)
    time = np.tile(np.arange(m, dtype=float), n)
    x = rng.normal(size=n * m)
    z = np.repeat(np.arange(n) % 2, m).astype(float)
    y = 1.0 + x + effect * z + rng.normal(size=n * m)
    return LongitudinalDataset.from_arrays(
        subject, time, y, x, z, varying_names=["x"], constant_names=["z"], intercept=True
    )


class TestResidualize:
    """Tests for the B-weighted projection."""

    @pytest.mark.parametrize("seed", range(5))
    def test_should_make_test_block_orthogonal_to_nuisance(self, seed):
        # Arrange
        rng = np.random.default_rng(seed)
        T = rng.normal(size=(60, 2))
        W = rng.normal(size=(60, 5))
        B = rng.uniform(0.2, 3.0, size=60)

        # Act
        design = residualize(T, W, B)

        # Assert
        assert design.orthogonality() <= 1e-8
        assert design.dropped == ()

    def test_should_drop_exactly_collinear_nuisance_columns(self):
        # Arrange
        rng = np.random.default_rng(3)
        w = rng.normal(size=(40, 2))
        W = np.column_stack([w, w[:, 0]])
        T = rng.normal(size=(40, 1))

        # Act
        design = residualize(T, W, np.ones(40))

        # Assert
        assert len(design.dropped) == 1
        assert design.W.shape[1] == 2
        assert design.orthogonality() <= 1e-8

    def test_should_reject_nearly_singular_nuisance(self):
        # Arrange
        rng = np.random.default_rng(4)
        w = rng.normal(size=40)
        W = np.column_stack([w, w + 1e-7 * rng.normal(size=40)])

        # Act / Assert
        with pytest.raises(IllConditionedError):
            residualize(
                rng.normal(size=(40, 1)), W, np.ones(40), pivot_tol=1e-12, max_condition=1e4
            )

    def test_should_pass_test_block_through_without_nuisance(self):
        # Arrange
        T = np.arange(6.0).reshape(6, 1)

        # Act
        design = residualize(T, np.zeros((6, 0)), np.ones(6))

        # Assert
        np.testing.assert_array_equal(design.D, T)


class TestRankScoreStatistic:
    """Tests for the rank score statistic."""

    @pytest.mark.parametrize("seed", range(5))
    def test_should_be_invariant_to_nuisance_shifts_of_the_test_block(self, seed):
        # Arrange
        rng = np.random.default_rng(50 + seed)
        T = rng.normal(size=(80, 2))
        W = np.column_stack([np.ones(80), rng.normal(size=(80, 2))])
        B = rng.uniform(0.5, 2.0, size=80)
        C = rng.normal(scale=5.0, size=(3, 2))
        scores = np.asarray(psi(rng.normal(size=80), 0.3))
        groups = grouped(16, 5)

        # Act
        _, _, original = rank_score_statistic(residualize(T, W, B).D, scores, groups)
        _, _, shifted = rank_score_statistic(residualize(T + W @ C, W, B).D, scores, groups)

        # Assert
        assert shifted == pytest.approx(original, rel=1e-8)

    def test_should_match_hand_arithmetic_for_empirical_covariance(self):
        # Arrange
        D = np.array([[1.0], [2.0], [-1.0], [3.0]])
        scores = np.asarray(psi(np.array([0.3, -1.2, -0.4, 2.0]), 0.25))

        # Act
        S, V, statistic = rank_score_statistic(D, scores, grouped(2, 2))

        # Assert
        assert S[0] == pytest.approx(0.125, abs=1e-12)
        assert V[0, 0] == pytest.approx(0.953125, abs=1e-12)
        assert statistic == pytest.approx(1.0 / 61.0, abs=1e-12)

    def test_should_match_hand_arithmetic_for_exchangeable_covariance(self):
        # Arrange
        D = np.array([[1.0], [2.0], [-1.0], [3.0]])
        scores = np.asarray(psi(np.array([0.3, -1.2, -0.4, 2.0]), 0.25))

        # Act
        S, V, statistic = rank_score_statistic(
            D, scores, grouped(2, 2), Correlation.EXCHANGEABLE, tau=0.25, delta=0.5
        )

        # Assert
        assert S[0] == pytest.approx(0.125, abs=1e-12)
        assert V[0, 0] == pytest.approx(0.484375, abs=1e-12)
        assert statistic == pytest.approx(1.0 / 31.0, abs=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_should_match_explicit_working_correlation_matrix(self, seed):
        # Arrange
        rng = np.random.default_rng(60 + seed)
        tau, delta, m = 0.25, 0.1, 3
        D = rng.normal(size=(15, 2))
        scores = np.asarray(psi(rng.normal(size=15), tau))
        groups = grouped(5, m)
        A = (delta - tau**2) * np.ones((m, m)) + (tau - delta) * np.eye(m)

        # Act
        S, V, statistic = rank_score_statistic(
            D, scores, groups, Correlation.EXCHANGEABLE, tau=tau, delta=delta
        )

        # Assert
        expected_S = D.T @ scores / math.sqrt(15)
        expected_V = sum(D[g].T @ A @ D[g] for g in groups) / 15
        expected = float(expected_S @ np.linalg.solve(expected_V, expected_S))
        np.testing.assert_allclose(S, expected_S, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(V, expected_V, rtol=1e-10, atol=1e-12)
        assert statistic == pytest.approx(expected, rel=1e-10)

    def test_should_require_tau_and_delta_for_exchangeable_form(self):
        # Arrange
        rng = np.random.default_rng(6)
        D = rng.normal(size=(20, 1))
        scores = np.asarray(psi(rng.normal(size=20), 0.5))

        # Act / Assert
        with pytest.raises(ArgumentError, match="tau and delta"):
            rank_score_statistic(D, scores, grouped(5, 4), Correlation.EXCHANGEABLE)

    def test_should_reject_singular_score_covariance(self):
        # Arrange
        D = np.zeros((12, 1))
        scores = np.full(12, 0.5)

        # Act / Assert
        with pytest.raises(DegenerateDesignError):
            rank_score_statistic(D, scores, grouped(4, 3))


class TestEstimateDelta:
    """Tests for the within-subject negative-pair fraction."""

    def test_should_count_ordered_pairs_with_both_residuals_negative(self):
        # Act
        delta = estimate_delta(np.array([-1.0, -2.0, 3.0]), [slice(0, 3)])

        # Assert
        assert delta == pytest.approx(1.0 / 3.0)

    def test_should_fail_without_any_pairs(self):
        # Act / Assert
        with pytest.raises(NoPairsError):
            estimate_delta(np.array([-1.0, 2.0]), [slice(0, 1), slice(1, 2)])


class TestWaldStatistic:
    """Tests for the sandwich Wald statistic."""

    def test_should_match_scalar_sandwich_formula(self):
        # Arrange
        rng = np.random.default_rng(7)
        z = rng.normal(size=(12, 1))
        scores = np.asarray(psi(rng.normal(size=12), 0.5))
        b = np.ones(12)
        groups = grouped(4, 3)
        beta = np.array([0.8])

        # Act
        statistic, C = wald_statistic(z, scores, b, groups, beta, [0])

        # Assert
        K = float(np.sum(z**2))
        Lam = sum(float(z[g, 0] @ scores[g]) ** 2 for g in groups)
        assert C[0, 0] == pytest.approx(Lam / K**2)
        assert statistic == pytest.approx(0.64 / (Lam / K**2))


class TestRankScoreBeta:
    """Tests for H0: beta = 0 on a dataset."""

    def test_should_report_projection_diagnostics(self, sim_dataset, spec_k1, solver):
        # Act
        result = rank_score_beta(sim_dataset, spec_k1, 0.5, [0], solver=solver)

        # Assert
        assert result.method == TestMethod.QRS
        assert result.df == 1
        assert 0.0 <= result.p_value <= 1.0
        assert result.hypothesis == "beta[z]=0"
        assert result.aux["orthogonality"] <= 1e-8

    def test_should_estimate_delta_for_exchangeable_form(self, sim_dataset, spec_k1, solver):
        # Act
        result = rank_score_beta(
            sim_dataset, spec_k1, 0.5, [0], Correlation.EXCHANGEABLE, solver=solver
        )

        # Assert
        assert result.method == TestMethod.QRS_DELTA
        assert 0.0 <= result.aux["delta"] <= 1.0

    def test_should_accept_estimated_density_weights(self, sim_dataset, spec_k1, solver):
        # Act
        result = rank_score_beta(
            sim_dataset, spec_k1, 0.5, [0], weights=WeightMode.ESTIMATED, solver=solver
        )

        # Assert
        assert result.aux["orthogonality"] <= 1e-8

    @pytest.mark.parametrize("correlation", list(Correlation))
    def test_should_reject_a_large_effect(self, solver, correlation):
        # Arrange
        ds = shifted_dataset(effect=5.0)

        # Act
        result = rank_score_beta(ds, make_spec(1, 3), 0.5, [0], correlation, solver=solver)

        # Assert
        assert result.rejects(0.05)

    @pytest.mark.parametrize("correlation", list(Correlation))
    def test_should_match_identity_weights_when_densities_are_equal(
        self, heteroscedastic_dataset, solver, monkeypatch, correlation
    ):
        # Arrange
        ds = heteroscedastic_dataset
        flat = DensityWeights(tau=0.5, eps_n=0.1, f_hat=np.full(ds.n_obs, 0.37))
        monkeypatch.setattr(inference, "estimate_weights", lambda *args, **kwargs: flat)
        spec = make_spec(1, 3)

        # Act
        identity = rank_score_beta(ds, spec, 0.5, [0], correlation, solver=solver)
        estimated = rank_score_beta(
            ds, spec, 0.5, [0], correlation, WeightMode.ESTIMATED, solver=solver
        )

        # Assert
        assert estimated.statistic == pytest.approx(identity.statistic, rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("scale", [0.1, 2.5, 4.0])
    @pytest.mark.parametrize("correlation", list(Correlation))
    def test_should_not_change_when_response_is_rescaled(
        self, heteroscedastic_dataset, solver, scale, correlation
    ):
        # Arrange
        ds = heteroscedastic_dataset
        scaled = replace(ds, y=ds.y * scale)
        spec = make_spec(1, 3)

        # Act
        original = rank_score_beta(ds, spec, 0.5, [0], correlation, solver=solver)
        rescaled = rank_score_beta(scaled, spec, 0.5, [0], correlation, solver=solver)

        # Assert
        assert rescaled.statistic == pytest.approx(original.statistic, rel=1e-8, abs=1e-12)

    def test_should_reject_empty_or_duplicate_index_sets(self, sim_dataset, spec_k1):
        # Act / Assert
        with pytest.raises(ArgumentError):
            rank_score_beta(sim_dataset, spec_k1, 0.5, [])
        with pytest.raises(ArgumentError):
            rank_score_beta(sim_dataset, spec_k1, 0.5, [0, 0])

    def test_should_refuse_columns_inside_the_nuisance_span(self, solver):
        # Arrange
        base = shifted_dataset(effect=0.0)
        ds = LongitudinalDataset.from_arrays(
            base.subject, base.time, base.y, base.x[:, 1:], np.ones(base.n_obs),
            varying_names=["x"], constant_names=["one"], intercept=True,
        )

        # Act / Assert
        with pytest.raises(DegenerateDesignError):
            rank_score_beta(ds, make_spec(1, 3), 0.5, [0], solver=solver)


class TestConstancyTest:
    """Tests for the time-invariance rank score test."""

    def test_should_use_non_constant_directions_as_degrees_of_freedom(
        self, heteroscedastic_dataset, solver
    ):
        # Act
        result = constancy_test(heteroscedastic_dataset, make_spec(1, 3), 0.5, [1], solver=solver)

        # Assert
        assert result.df == 4
        assert result.hypothesis == "x constant"
        assert result.aux["normal_approximation"] == pytest.approx(
            (result.statistic - 4) / math.sqrt(8.0)
        )

    def test_should_not_change_when_response_is_rescaled(self, heteroscedastic_dataset, solver):
        # Arrange
        ds = heteroscedastic_dataset
        spec = make_spec(1, 3)

        # Act
        original = constancy_test(ds, spec, 0.5, [1], solver=solver)
        rescaled = constancy_test(replace(ds, y=ds.y * 2.5), spec, 0.5, [1], solver=solver)

        # Assert
        assert rescaled.statistic == pytest.approx(original.statistic, rel=1e-8)

    def test_should_detect_a_linear_trend_in_a_coefficient(self, heteroscedastic_dataset, solver):
        # Act
        result = constancy_test(heteroscedastic_dataset, make_spec(1, 3), 0.5, [1], solver=solver)

        # Assert
        assert result.rejects(0.05)


class TestWaldTest:
    """Tests for the Wald test on a dataset."""

    def test_should_report_bandwidth_and_reject_a_large_effect(self, solver):
        # Arrange
        ds = shifted_dataset(effect=5.0)

        # Act
        result = wald_test(ds, make_spec(1, 3), 0.5, [0], solver=solver)

        # Assert
        assert result.method == TestMethod.WALD
        assert result.aux["eps_n"] > 0
        assert result.rejects(0.05)


class TestHypothesisTable:
    """Tests for the multi-quantile report."""

    def test_should_order_rows_by_tau_then_hypothesis(self, heteroscedastic_dataset, solver):
        # Act
        rows = hypothesis_table(
            heteroscedastic_dataset,
            make_spec(1, 3),
            [0.25, 0.5],
            beta_tests=[[0]],
            constancy_tests=[[1]],
            shrink=False,
            solver=solver,
        )

        # Assert
        assert [(r.tau, r.hypothesis) for r in rows] == [
            (0.25, "beta[z]=0"),
            (0.25, "x constant"),
            (0.5, "beta[z]=0"),
            (0.5, "x constant"),
        ]
        assert all(r.xi1_l1norm is None for r in rows)
