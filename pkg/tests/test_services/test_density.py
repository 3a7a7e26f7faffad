"""Tests for bandwidth and density weight estimation."""

import numpy as np
import pytest

from plvc_quantile.models.errors import ArgumentError
from plvc_quantile.models.inference import WeightMode
from plvc_quantile.services.density import (
    build_B,
    difference_quotient,
    estimate_weights,
    hall_sheather_bandwidth,
)


class TestHallSheatherBandwidth:
    """Tests for the quantile spacing bandwidth."""

    @pytest.mark.parametrize(
        "n, expected",
        [(8, 0.302095), (1000, 0.0604189)],
    )
    def test_should_match_closed_form_at_the_median(self, n, expected):
        # Act
        eps = hall_sheather_bandwidth(0.5, n)

        # Assert
        assert eps == pytest.approx(expected, rel=1e-5)

    @pytest.mark.parametrize("n, reference", [(8, 0.3022), (1000, 0.06043)])
    def test_should_agree_with_published_reference_values(self, n, reference):
        # Act / Assert
        assert hall_sheather_bandwidth(0.5, n) == pytest.approx(reference, rel=5e-4)

    def test_should_shrink_with_sample_size(self):
        # Act / Assert
        assert hall_sheather_bandwidth(0.3, 500) < hall_sheather_bandwidth(0.3, 50)

    @pytest.mark.parametrize("tau", [0.01, 0.99])
    def test_should_keep_both_sides_inside_unit_interval(self, tau):
        # Act
        eps = hall_sheather_bandwidth(tau, 2)

        # Assert
        assert 0.0 < tau - eps
        assert tau + eps < 1.0


class TestDifferenceQuotient:
    """Tests for the capped difference quotient."""

    def test_should_floor_small_and_negative_spreads(self):
        # Act
        f_hat, floored = difference_quotient(np.array([0.2, 0.0, -1.0]), 0.1, cap=1000.0)

        # Assert
        np.testing.assert_allclose(f_hat, [1.0, 1000.0, 1000.0])
        assert floored == 2


class TestEstimateWeights:
    """Tests for per-observation density weights."""

    def test_should_return_positive_weight_per_observation(self, sim_dataset, spec_k1, solver):
        # Act
        weights = estimate_weights(sim_dataset, spec_k1, 0.5, solver=solver)

        # Assert
        assert weights.f_hat.shape == (sim_dataset.n_obs,)
        assert np.all(weights.f_hat > 0)
        assert weights.eps_n == pytest.approx(hall_sheather_bandwidth(0.5, sim_dataset.n))


class TestBuildB:
    """Tests for the diagonal weight matrix."""

    def test_should_return_ones_in_identity_mode(self):
        # Act
        b = build_B(None, WeightMode.IDENTITY, n_obs=5)

        # Assert
        np.testing.assert_array_equal(b, np.ones(5))

    def test_should_require_size_without_weights(self):
        # Act / Assert
        with pytest.raises(ArgumentError, match="n_obs"):
            build_B(None, WeightMode.IDENTITY)

    def test_should_copy_estimated_weights(self, sim_dataset, spec_k1, solver):
        # Arrange
        weights = estimate_weights(sim_dataset, spec_k1, 0.5, solver=solver)

        # Act
        b = build_B(weights)

        # Assert
        np.testing.assert_array_equal(b, weights.f_hat)
