"""
Tests for circle quadrature, lifts, preimages and arc images.
"""

import numpy as np
import pytest

from src.blaschke import BlaschkeProduct
from src.circle_numerics import (
    CircleGrid,
    GridFunction,
    arc_image_measure,
    build_lift,
    circle_coordinate,
    lift_total_variation,
    preimage_array,
    preimages,
    quadrature,
)
from src.domain.protocols import GridTooCoarse


class TestQuadrature:
    """Trapezoid rule on the uniform circle grid."""

    def test_constant(self, grid):
        assert quadrature(np.full(grid.size, 2.5)) == pytest.approx(2.5)

    @pytest.mark.parametrize("k", [1, 2, 5, -3])
    def test_monomials_vanish(self, k, grid):
        assert abs(quadrature(grid.z ** k)) < 1e-14

    def test_log_distance_has_zero_mean(self, grid):
        """∫ log|z - 0.4|² dm = 0."""
        assert abs(quadrature(np.log(np.abs(grid.z - 0.4) ** 2))) < 1e-10

    def test_grid_too_coarse(self):
        with pytest.raises(GridTooCoarse):
            CircleGrid(4)

    def test_grid_integrate(self):
        grid = CircleGrid(16)
        assert grid.integrate(np.ones(16)) == pytest.approx(1.0)

    def test_circle_coordinate_range(self, grid):
        t = circle_coordinate(grid.z)
        assert np.all((t >= 0.0) & (t < 1.0))
        assert np.allclose(t, grid.t, atol=1e-14)


class TestGridFunction:
    """Spectral interpolation of grid samples."""

    def test_trig_polynomial_is_exact_off_grid(self):
        grid = CircleGrid(64)
        f = GridFunction.from_callable(lambda z: 1.0 + np.real(z ** 3) + 0.5 * np.imag(z ** 7), grid)
        w = np.exp(2j * np.pi * np.array([0.0123, 0.456, 0.789]))
        expected = 1.0 + np.real(w ** 3) + 0.5 * np.imag(w ** 7)
        assert np.allclose(f(w), expected, atol=1e-12)
        assert not np.iscomplexobj(f(w))

    def test_poisson_kernel_interpolates(self):
        grid = CircleGrid(512)
        pole = 0.6 - 0.3j
        f = GridFunction.from_callable(lambda z: (1 - abs(pole) ** 2) / np.abs(z - pole) ** 2, grid)
        w = np.exp(2j * np.pi * np.linspace(0.001, 0.999, 37))
        assert np.allclose(f(w), (1 - abs(pole) ** 2) / np.abs(w - pole) ** 2, atol=1e-10)

    def test_shape_checked(self):
        with pytest.raises(ValueError, match="Expected 16 samples"):
            GridFunction(np.ones(8), CircleGrid(16))


class TestLift:
    """Monotone lifts and their inverses."""

    def test_square_lift_is_doubling(self, T0):
        lift = build_lift(T0, 256)
        t = np.linspace(0.0, 0.99, 50)
        assert np.allclose(lift(t), 2.0 * t, atol=1e-12)
        assert lift.degree == 2

    def test_rotation_lift_is_translation(self):
        lift = build_lift(BlaschkeProduct.rotation_map(0.25), 256)
        t = np.linspace(0.0, 0.99, 50)
        assert np.allclose(lift(t), t + 0.25, atol=1e-12)

    def test_t1_winding_and_slope(self, T1):
        lift = build_lift(T1, 4096)
        assert lift(1.0) - lift(0.0) == pytest.approx(2.0, abs=1e-12)
        t = np.linspace(0.0, 1.0, 2001)
        assert np.all(np.diff(lift(t)) > 0)
        assert lift.slope(0.5) == pytest.approx(6 / 7)
        assert float(np.mod(lift(0.5), 1.0)) == pytest.approx(0.5, abs=1e-12)

    def test_slope_matches_finite_difference(self, T1):
        lift = build_lift(T1, 4096)
        t, h = 0.123, 1e-6
        assert (lift(t + h) - lift(t - h)) / (2 * h) == pytest.approx(lift.slope(t), rel=1e-7)

    def test_inverse(self, T1):
        lift = build_lift(T1, 4096)
        t = np.array([0.05, 0.3, 0.5, 0.77])
        assert np.allclose(lift.inverse(lift(t)), t, atol=1e-13)

    def test_periodicity(self, T1):
        lift = build_lift(T1, 1024)
        assert lift(1.3) == pytest.approx(lift(0.3) + 2.0, abs=1e-12)

    def test_total_variation_of_rotation_is_zero(self):
        assert lift_total_variation(BlaschkeProduct.rotation_map(0.1), N=1024) == pytest.approx(0.0, abs=1e-12)


class TestPreimages:
    """Preimages on the circle."""

    def test_square_of_one(self, T0):
        turns = [w.turns for w in preimages(T0, 1.0)]
        assert turns == pytest.approx([0.0, 0.5], abs=1e-12)

    def test_square_of_i(self, T0):
        values = [w.value for w in preimages(T0, 1j)]
        expected = [np.exp(1j * np.pi / 4), np.exp(5j * np.pi / 4)]
        assert np.allclose(values, expected, atol=1e-12)

    def test_t1_fixed_point_is_a_preimage(self, T1):
        values = [w.value for w in preimages(T1, -1.0)]
        assert len(values) == 2
        assert min(abs(v + 1.0) for v in values) < 1e-10
        assert all(abs(T1(v) + 1.0) < 1e-10 for v in values)

    def test_preimage_array_shape(self, T1, grid):
        w = preimage_array(build_lift(T1, 1024), grid.z[:100])
        assert w.shape == (100, 2)
        assert np.allclose(T1(w), grid.z[:100, None], atol=1e-10)

    def test_high_degree(self):
        T = BlaschkeProduct.from_turns(0.1, [0.3, -0.5j, 0.7, 0.2 + 0.2j, 0.0])
        values = [w.value for w in preimages(T, np.exp(0.4j))]
        assert len(values) == 5
        assert all(abs(T(v) - np.exp(0.4j)) < 1e-10 for v in values)


class TestArcImages:
    """Normalized measure of arc images."""

    def test_square_doubles(self, T0):
        assert arc_image_measure(T0, (0.0, 0.3)) == pytest.approx(0.6, abs=1e-12)

    def test_square_saturates(self, T0):
        assert arc_image_measure(T0, (0.1, 0.7)) == 1.0

    def test_t1_expansion_lower_bound(self, T1):
        assert arc_image_measure(T1, (0.45, 0.55)) >= (6 / 7) * 0.1 - 1e-12

    def test_invalid_arc(self, T0):
        with pytest.raises(ValueError, match="Arc must satisfy"):
            arc_image_measure(T0, (0.5, 0.2))
