"""Tests for B-spline basis construction and evaluation."""

import numpy as np
import pytest

from plvc_quantile.models.errors import ArgumentError, DegenerateKnotsError, DomainError
from plvc_quantile.splines import eval_basis, make_spec


class TestMakeSpec:
    """Tests for make_spec."""

    def test_should_place_uniform_internal_knots(self) -> None:
        # Act
        spec = make_spec(3, degree=3)

        # Assert
        assert spec.internal_knots == pytest.approx((0.25, 0.5, 0.75))
        assert spec.basis_dim == 7
        assert spec.k_internal == 3

    def test_should_repeat_boundary_knots(self) -> None:
        # Act
        spec = make_spec(1, degree=2)

        # Assert
        assert spec.knots == (0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0)

    def test_should_place_knots_at_sample_quantiles(self) -> None:
        # Arrange
        times = np.linspace(0.0, 1.0, 101) ** 2

        # Act
        spec = make_spec(1, degree=3, placement="sample-quantile", times=times)

        # Assert
        assert spec.internal_knots[0] == pytest.approx(0.25)

    def test_should_separate_coincident_quantile_knots(self) -> None:
        # Arrange
        times = np.array([0.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 1.0])

        # Act
        spec = make_spec(2, degree=3, placement="sample-quantile", times=times)

        # Assert
        knots = np.asarray(spec.internal_knots)
        assert np.all(np.diff(knots) > 0)
        assert np.all((knots > 0) & (knots < 1))

    def test_should_reject_too_few_distinct_times(self) -> None:
        # Act & Assert
        with pytest.raises(DegenerateKnotsError):
            make_spec(3, placement="sample-quantile", times=np.array([0.2, 0.2, 0.4]))

    def test_should_require_times_for_quantile_placement(self) -> None:
        # Act & Assert
        with pytest.raises(ArgumentError):
            make_spec(2, placement="sample-quantile")

    def test_should_reject_negative_knot_count(self) -> None:
        # Act & Assert
        with pytest.raises(ArgumentError):
            make_spec(-1)


class TestEvalBasis:
    """Tests for eval_basis."""

    def test_should_match_bernstein_polynomials_without_internal_knots(self) -> None:
        # Arrange
        spec = make_spec(0, degree=3)

        # Act
        values = eval_basis(spec, 0.5)

        # Assert
        np.testing.assert_allclose(values, [0.125, 0.375, 0.375, 0.125], atol=1e-12)

    @pytest.mark.parametrize("k_n", [0, 1, 2, 4, 7])
    @pytest.mark.parametrize("degree", [0, 1, 2, 3])
    def test_should_form_partition_of_unity(self, k_n: int, degree: int) -> None:
        # Arrange
        spec = make_spec(k_n, degree=degree)
        grid = np.linspace(0.0, 1.0, 1000)

        # Act
        basis = eval_basis(spec, grid)

        # Assert
        assert basis.shape == (1000, spec.basis_dim)
        np.testing.assert_allclose(basis.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(basis >= -1e-15)

    def test_should_be_right_continuous_at_one(self) -> None:
        # Arrange
        spec = make_spec(2, degree=3)

        # Act
        values = eval_basis(spec, 1.0)

        # Assert
        expected = np.zeros(spec.basis_dim)
        expected[-1] = 1.0
        np.testing.assert_allclose(values, expected, atol=1e-12)

    def test_should_return_vector_for_scalar_time(self) -> None:
        # Act
        values = eval_basis(make_spec(1), 0.3)

        # Assert
        assert values.shape == (5,)

    @pytest.mark.parametrize("t", [-0.01, 1.01, float("nan")])
    def test_should_raise_domain_error_outside_unit_interval(self, t: float) -> None:
        # Act & Assert
        with pytest.raises(DomainError):
            eval_basis(make_spec(1), t)

    def test_should_have_local_support(self) -> None:
        # Arrange
        spec = make_spec(3, degree=1)

        # Act
        values = eval_basis(spec, 0.1)

        # Assert
        assert np.count_nonzero(values) == 2
