"""
Tests for closed-form entropies, the orbit and quadrature estimators and
the θ-sweep.
"""

import numpy as np
import pytest

from src.blaschke import BlaschkeProduct
from src.circle_numerics import CircleGrid
from src.cocycle import DrivingSystem, sample_path
from src.domain.protocols import NonConvergence, UnitComplex
from src.entropy import (
    EntropyReport,
    Estimate,
    analytic_fibre_average,
    average_entropy_analytic,
    base_entropy,
    batch_means_stderr,
    deterministic_entropy,
    entropy_report,
    estimate_fibre_entropy,
    fibre_entropy_orbit,
    fibre_entropy_quadrature,
    lebesgue_log_deriv,
    lebesgue_theta_average_residual,
    orbit_log_derivatives,
    theta_grid,
    theta_sweep,
)
from src.presets import attracting_square, constant_table, expanding_square, mixed_cubic, sigma1, sigma2

LOG_1_68 = float(np.log(1.68))
ANALYTIC_FIBRE = 0.2 * float(np.log(2.0)) + 0.8 * LOG_1_68


class TestClosedForms:
    """Base entropy and Lebesgue averages of log|T'|."""

    def test_base_entropy(self, bernoulli, rotation):
        assert base_entropy(DrivingSystem.bernoulli([0.5, 0.5])) == pytest.approx(np.log(2.0))
        assert base_entropy(bernoulli) == pytest.approx(0.500402, abs=1e-6)
        assert base_entropy(rotation) == 0.0

    def test_zero_probability_symbols_are_skipped(self):
        assert base_entropy(DrivingSystem.bernoulli([1.0, 0.0])) == 0.0

    def test_lebesgue_log_deriv(self, T0, T1):
        assert lebesgue_log_deriv(T0) == pytest.approx(np.log(2.0), abs=1e-12)
        assert abs(lebesgue_log_deriv(T1) - LOG_1_68) < 1e-10
        assert abs(lebesgue_log_deriv(BlaschkeProduct.rotation_map(0.2))) < 1e-14

    def test_analytic_fibre_average(self, table, bernoulli):
        value = analytic_fibre_average(table, bernoulli)
        assert abs(value - ANALYTIC_FIBRE) < 1e-10
        assert value == pytest.approx(0.553664, abs=1e-6)

    def test_average_entropy_adds_base(self, table, bernoulli, rotation):
        assert average_entropy_analytic(table, bernoulli) == pytest.approx(ANALYTIC_FIBRE + 0.500402, abs=1e-6)
        assert average_entropy_analytic(table, rotation) == pytest.approx(ANALYTIC_FIBRE, abs=1e-10)

    def test_deterministic_entropy_at_origin_attractor(self, T_mixed):
        """With x = 0 the invariant density is 1."""
        assert deterministic_entropy(T_mixed) == pytest.approx(lebesgue_log_deriv(T_mixed), abs=1e-12)

    def test_deterministic_entropy_needs_disc_attractor(self, T1):
        with pytest.raises(NonConvergence, match="AllOnCircle"):
            deterministic_entropy(T1)


class TestOrbitEstimator:
    """Birkhoff averages along forward orbits."""

    def test_squares_give_log_two(self, squares_path):
        estimate = fibre_entropy_orbit(squares_path, n_steps=1000, burn_in=0)
        assert estimate.value == pytest.approx(np.log(2.0), abs=1e-12)
        assert estimate.stderr == pytest.approx(0.0, abs=1e-12)

    def test_minimum_steps(self, squares_path):
        with pytest.raises(ValueError, match="at least 100"):
            fibre_entropy_orbit(squares_path, n_steps=99)

    def test_short_forward_window(self, t1_path):
        with pytest.raises(ValueError, match="forward symbols"):
            fibre_entropy_orbit(t1_path, n_steps=1000, burn_in=0)

    def test_constant_mixed_cubic_matches_invariant_density(self):
        table, driving = constant_table(mixed_cubic())
        path = sample_path(driving, table, seed=4, n_back=0, n_fwd=101_000)
        estimate = fibre_entropy_orbit(path, n_steps=100_000, burn_in=1000)
        expected = deterministic_entropy(mixed_cubic())
        assert abs(estimate.value - expected) < 5 * estimate.stderr + 1e-3

    def test_batch_means_stderr(self):
        assert batch_means_stderr(np.ones(100)) == 0.0
        assert np.isnan(batch_means_stderr(np.ones(3)))

    def test_batch_count(self):
        samples = np.repeat([0.0, 1.0], 50)
        assert batch_means_stderr(samples, n_batches=2) == pytest.approx(0.5)
        assert batch_means_stderr(samples, n_batches=4) == pytest.approx(np.sqrt(1 / 3) / 2)

    def test_batch_count_reaches_report(self, table, bernoulli):
        path = sample_path(bernoulli, table, seed=6, n_back=0, n_fwd=1000)
        logs = orbit_log_derivatives(path, n_steps=1000, burn_in=0)
        report = entropy_report(path, n_steps=1000, burn_in=0, n_batches=5)
        assert report.fibre_orbit.stderr == pytest.approx(batch_means_stderr(logs, 5))


class TestQuadratureEstimator:
    """Averages of ∫ log|T'| P_{x_ω} dm over fibres."""

    def test_deterministic_reduction(self):
        table, driving = constant_table(mixed_cubic())
        n_fibres = 20
        path = sample_path(driving, table, seed=4, n_back=10_000, n_fwd=n_fibres)
        estimate = fibre_entropy_quadrature(path, n_fibres=n_fibres, grid=CircleGrid(2048))
        assert abs(estimate.value - deterministic_entropy(mixed_cubic(), N=2048)) < 1e-8
        assert estimate.n_fibres == n_fibres
        assert estimate.boundary_fraction == 0.0

    def test_all_fibres_diverge(self, t1_path):
        estimate = fibre_entropy_quadrature(t1_path, n_fibres=5, grid=CircleGrid(256), max_n=1000)
        assert estimate.n_fibres == 0
        assert estimate.boundary_fraction == 1.0
        assert np.isnan(estimate.value)

    def test_stratified_mixed_path(self, mixed_path):
        estimate = fibre_entropy_quadrature(mixed_path, n_fibres=100, grid=CircleGrid(2048))
        assert estimate.stratified
        assert estimate.boundary_fraction == 0.0
        assert np.isfinite(estimate.value)
        assert 0.0 < estimate.value < 1.0

    def test_unstratified_keeps_plain_mean(self, mixed_path):
        estimate = fibre_entropy_quadrature(mixed_path, n_fibres=50, grid=CircleGrid(1024), stratify=False)
        assert not estimate.stratified
        assert estimate.to_dict()["n_fibres"] == 50

    def test_fibre_window_checked(self, mixed_path):
        with pytest.raises(ValueError, match="fibres requested"):
            fibre_entropy_quadrature(mixed_path, n_fibres=201)

    def test_quadrature_estimate_of_all_diverging_map_raises(self):
        table, driving = constant_table(attracting_square())
        with pytest.raises(NonConvergence):
            estimate_fibre_entropy(
                table, driving, 0.0, seed=1, estimator="quadrature",
                n_fibres=3, grid_size=256, max_backward_steps=500,
            )

    def test_unknown_estimator(self, table, bernoulli):
        with pytest.raises(ValueError, match="Unknown estimator"):
            estimate_fibre_entropy(table, bernoulli, 0.0, seed=1, estimator="magic")


class TestEntropyReport:
    """Report assembly and totals."""

    def test_orbit_only(self, squares_path):
        report = entropy_report(squares_path, n_steps=200, burn_in=0)
        assert report.fibre == pytest.approx(np.log(2.0))
        assert report.total == pytest.approx(np.log(2.0))
        assert report.estimators_agree is None
        assert report.to_dict()["theta_turns"] == 0.0

    def test_missing_quadrature(self):
        report = EntropyReport(Estimate(0.1, 0.01), None, 0.5, 100, UnitComplex.one(), estimator="quadrature")
        with pytest.raises(ValueError, match="not computed"):
            _ = report.fibre

    @pytest.mark.slow
    @pytest.mark.parametrize("t", [0.0, 0.25])
    def test_estimators_agree_on_two_map_cocycle(self, table, bernoulli, t):
        theta = UnitComplex.from_turns(t)
        orbit_path = sample_path(bernoulli, table, seed=21, n_back=0, n_fwd=201_000, theta=theta)
        fibre_path = sample_path(bernoulli, table, seed=22, n_back=10_000, n_fwd=2000, theta=theta)
        report = entropy_report(
            orbit_path, fibre_path, n_steps=200_000, burn_in=1000, n_fibres=2000, grid=CircleGrid(2048)
        )
        assert report.estimators_agree
        assert report.base_entropy == pytest.approx(0.500402, abs=1e-6)


class TestThetaSweep:
    """Fibre entropy over the rotated family."""

    def test_theta_grid(self):
        assert theta_grid(4) == [0.0, 0.25, 0.5, 0.75]
        with pytest.raises(ValueError):
            theta_grid(0)

    def test_squares_are_flat(self):
        table, driving = constant_table(expanding_square())
        result = theta_sweep(table, driving, theta_grid(4), n_steps=100, seed=3, workers=1, burn_in=0)
        assert np.allclose(result.values, np.log(2.0), atol=1e-12)
        assert result.n_failed == 0
        assert result.mean == pytest.approx(np.log(2.0))
        assert result.to_dict()["t"] == [0.0, 0.25, 0.5, 0.75]

    def test_failures_are_recorded(self):
        table, driving = constant_table(attracting_square())
        result = theta_sweep(
            table, driving, [0.0], n_steps=100, seed=3, estimator="quadrature", workers=1,
            n_fibres=3, grid_size=256, max_backward_steps=500,
        )
        assert result.n_failed == 1
        assert np.isnan(result.values[0])
        assert np.isnan(result.mean)
        assert "NonConvergence" in result.failures[0]

    def test_same_seed_same_values(self, table, bernoulli):
        grid = theta_grid(3)
        a = theta_sweep(table, bernoulli, grid, n_steps=200, seed=5, workers=1, burn_in=10)
        b = theta_sweep(table, bernoulli, grid, n_steps=200, seed=5, workers=1, burn_in=10)
        assert np.array_equal(a.values, b.values)

    def test_worker_count_does_not_change_values(self, table, bernoulli):
        grid = theta_grid(4)
        serial = theta_sweep(table, bernoulli, grid, n_steps=200, seed=7, workers=1, burn_in=10)
        pooled = theta_sweep(table, bernoulli, grid, n_steps=200, seed=7, workers=2, burn_in=10)
        assert np.array_equal(serial.values, pooled.values)

    def test_empty_grid(self, table, bernoulli):
        with pytest.raises(ValueError, match="must not be empty"):
            theta_sweep(table, bernoulli, [], n_steps=100, seed=1)

    @pytest.mark.slow
    @pytest.mark.parametrize("make_driving", [sigma1, sigma2], ids=["bernoulli", "rotation"])
    def test_sweep_mean_matches_lebesgue_average(self, table, make_driving):
        """The θ-average of h^fib is Σ_j ℙ(j) ∫ log|T_j'| dm for both drivings."""
        result = theta_sweep(table, make_driving(), theta_grid(128), n_steps=10_000, seed=20240501)
        assert result.n_failed == 0
        assert abs(result.mean - ANALYTIC_FIBRE) / ANALYTIC_FIBRE < 0.005

    def test_chunk_size_does_not_change_values(self, table, bernoulli):
        grid = theta_grid(5)
        single = theta_sweep(table, bernoulli, grid, n_steps=150, seed=9, workers=2, chunk_size=1, burn_in=10)
        chunked = theta_sweep(table, bernoulli, grid, n_steps=150, seed=9, workers=2, chunk_size=3, burn_in=10)
        assert np.array_equal(single.values, chunked.values)


class TestLebesgueThetaAverage:
    """∫∫ f∘T^{(n)}_{σ^{-n}ω,θ} dm dθ = ∫ f dm."""

    def test_real_part(self, table, bernoulli):
        residual = lebesgue_theta_average_residual(
            table, bernoulli, np.real, n=3, theta_points=256, seed=3, grid=CircleGrid(1024)
        )
        assert residual < 1e-8

    def test_log_derivative(self, table, bernoulli, T1):
        residual = lebesgue_theta_average_residual(
            table, bernoulli, lambda z: np.log(T1.deriv_modulus(z)), n=4, theta_points=256, seed=3
        )
        assert residual < 1e-8

    def test_single_theta_is_not_enough(self, T1):
        """Without averaging, T1 moves Lebesgue measure."""
        table, driving = constant_table(T1)
        residual = lebesgue_theta_average_residual(
            table, driving, np.real, n=1, theta_points=[0.0], seed=0, grid=CircleGrid(1024)
        )
        assert residual == pytest.approx(0.16, abs=1e-10)


class TestExports:
    """Public names of the entropy module."""

    def test_cocycle_helpers_are_not_reexported(self):
        import src.entropy as entropy

        assert "derive_seed" not in entropy.__all__
        assert "circle_points" not in entropy.__all__
        assert all(hasattr(entropy, name) for name in entropy.__all__)
