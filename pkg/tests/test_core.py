"""
Tests for grids, wavefunctions, potentials and the classical integrators.
"""

import numpy as np
import pytest

from weakpath.core import (
    ConfigFunction,
    Grid,
    PhysicalParams,
    WaveFunction,
    expectation,
    gaussian_wavepacket,
    inner_product,
    momentum_grid,
)
from weakpath.exceptions import (
    GridError,
    GridMismatchError,
    IntegratorError,
    NormalizationError,
    SupportEscapedError,
)
from weakpath.integrators import integrate
from weakpath.potentials import Potential


class TestGrid:
    """Test suite for Grid."""

    def test_spacing_includes_end_points(self):
        """Test dx counts both end points."""
        grid = Grid(0.0, 1.0, 11)
        assert grid.dx == pytest.approx(0.1)
        assert grid.points[0] == 0.0
        assert grid.points[-1] == pytest.approx(1.0)

    def test_momentum_grid(self):
        """Test momenta are hbar times the FFT wavenumbers."""
        grid = Grid(-1.0, 1.0, 16)
        p = momentum_grid(grid, PhysicalParams(hbar=2.0))
        assert p == pytest.approx(2.0 * grid.wavenumbers())
        assert p[1] == pytest.approx(2.0 * 2 * np.pi / (16 * grid.dx))

    def test_too_few_points(self):
        """Test grids below eight points are rejected."""
        with pytest.raises(GridError, match="n_points"):
            Grid(0.0, 1.0, 4)

    def test_empty_interval(self):
        """Test an inverted interval is rejected."""
        with pytest.raises(GridError, match="empty grid"):
            Grid(1.0, 0.0, 16)

    def test_index_of_snaps_to_nearest(self):
        """Test positions snap to the nearest grid point."""
        grid = Grid(0.0, 1.0, 11)
        assert grid.index_of(0.31) == 3
        assert grid.index_of(1.0) == 10

    def test_index_outside_grid(self):
        """Test positions off the grid raise."""
        grid = Grid(0.0, 1.0, 11)
        with pytest.raises(GridError, match="outside grid"):
            grid.index_of(2.0)


class TestWaveFunction:
    """Test suite for wavefunctions and Gaussian packets."""

    @pytest.fixture
    def grid(self):
        return Grid(-10.0, 10.0, 256)

    def test_gaussian_is_normalized(self, grid):
        """Test the packet has unit norm on the grid."""
        psi = gaussian_wavepacket(grid, 1.0, 0.0, 1.0)
        assert psi.norm_squared() == pytest.approx(1.0, abs=1e-12)
        assert psi.is_normalized()

    def test_gaussian_moments(self, grid):
        """Test center, width and momentum of the packet."""
        psi = gaussian_wavepacket(grid, 1.0, 0.5, 1.0)
        assert psi.position_expectation() == pytest.approx(1.0, abs=1e-10)
        assert psi.position_variance() == pytest.approx(1.0, abs=1e-8)
        assert psi.momentum_expectation() == pytest.approx(0.5, abs=1e-6)

    def test_momentum_scales_with_hbar(self, grid):
        """Test <p> follows p0 for a different hbar."""
        params = PhysicalParams(hbar=2.0)
        psi = gaussian_wavepacket(grid, 0.0, 1.0, 1.0, params)
        assert psi.momentum_expectation(params) == pytest.approx(1.0, abs=1e-6)

    def test_unresolved_sigma(self, grid):
        """Test a packet narrower than four cells is rejected."""
        with pytest.raises(GridError, match="unresolvable"):
            gaussian_wavepacket(grid, 0.0, 0.0, 0.1)

    def test_clipped_packet(self, grid):
        """Test a packet whose support leaves the grid is rejected."""
        with pytest.raises(GridError, match="clipped"):
            gaussian_wavepacket(grid, 8.0, 0.0, 1.0)

    def test_support_check_flags_edge_amplitude(self, grid):
        """Test the boundary-decay rule catches a packet near the edge."""
        psi = gaussian_wavepacket(grid, 5.0, 0.0, 1.0)
        with pytest.raises(SupportEscapedError) as exc_info:
            psi.check_support()
        assert exc_info.value.edge_amplitude > 1e-8

    def test_support_check_passes_centered(self, grid):
        """Test a centered packet satisfies the boundary rule."""
        gaussian_wavepacket(grid, 0.0, 0.0, 1.0).check_support()

    def test_amplitudes_are_read_only(self, grid):
        """Test amplitudes cannot be mutated in place."""
        psi = gaussian_wavepacket(grid, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 1.0

    def test_shape_mismatch(self, grid):
        """Test amplitudes must match the grid."""
        with pytest.raises(GridMismatchError):
            WaveFunction(grid, np.zeros(10))

    def test_normalize_zero_state(self, grid):
        """Test the zero state cannot be normalized."""
        with pytest.raises(NormalizationError):
            WaveFunction(grid, np.zeros(grid.n_points)).normalized()


class TestInnerProducts:
    """Test suite for inner products and expectations."""

    @pytest.fixture
    def grid(self):
        return Grid(-10.0, 10.0, 256)

    def test_self_overlap(self, grid):
        """Test <psi|psi> = 1 for a normalized state."""
        psi = gaussian_wavepacket(grid, 0.0, 0.3, 1.0)
        assert inner_product(psi, psi) == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_overlap(self, grid):
        """Test the overlap of two displaced packets, exp(-d^2 / 8 sigma^2)."""
        a = gaussian_wavepacket(grid, -1.0, 0.0, 1.0)
        b = gaussian_wavepacket(grid, 1.0, 0.0, 1.0)
        assert inner_product(a, b).real == pytest.approx(np.exp(-0.5), abs=1e-10)

    def test_grid_mismatch(self, grid):
        """Test states on different grids cannot be contracted."""
        a = gaussian_wavepacket(grid, 0.0, 0.0, 1.0)
        b = gaussian_wavepacket(Grid(-10.0, 10.0, 128), 0.0, 0.0, 1.0)
        with pytest.raises(GridMismatchError):
            inner_product(a, b)

    def test_expectation_of_position(self, grid):
        """Test <x> through a configuration function."""
        psi = gaussian_wavepacket(grid, 2.0, 0.0, 1.0)
        x = ConfigFunction.from_callable(grid, lambda q: q)
        assert expectation(psi, x) == pytest.approx(2.0, abs=1e-10)

    def test_expectation_requires_normalization(self, grid):
        """Test an unnormalized state is rejected."""
        psi = WaveFunction(grid, 2.0 * gaussian_wavepacket(grid, 0.0, 0.0, 1.0).amplitudes)
        with pytest.raises(NormalizationError):
            expectation(psi, ConfigFunction.constant(grid, 1.0))


class TestConfigFunction:
    """Test suite for ConfigFunction."""

    def test_indicator(self):
        """Test the indicator is one inside the closed interval."""
        grid = Grid(0.0, 1.0, 11)
        A = ConfigFunction.indicator(grid, 0.3, 0.5)
        assert A.values.sum() == 3

    def test_smooth_indicator(self):
        """Test the tanh-edged indicator is one half at its edges and inside (0, 1)."""
        grid = Grid(-5.0, 5.0, 101)
        A = ConfigFunction.smooth_indicator(grid, -1.0, 1.0, 0.2)
        assert A.values[grid.index_of(0.0)] == pytest.approx(1.0, abs=1e-8)
        assert A.values[grid.index_of(1.0)] == pytest.approx(0.5, abs=1e-8)
        assert A.values[grid.index_of(-4.0)] < 1e-12
        assert np.all((A.values > 0) & (A.values < 1))

    def test_smooth_indicator_edge(self):
        """Test a zero edge width is rejected."""
        with pytest.raises(ValueError, match="edge"):
            ConfigFunction.smooth_indicator(Grid(0.0, 1.0, 11), 0.3, 0.5, 0.0)

    def test_non_finite_rejected(self):
        """Test infinities are rejected."""
        grid = Grid(0.0, 1.0, 11)
        values = np.zeros(11)
        values[2] = np.inf
        with pytest.raises(ValueError, match="finite"):
            ConfigFunction(grid, values)

    def test_interpolate_vanishes_off_grid(self):
        """Test interpolation is linear inside and zero outside."""
        grid = Grid(0.0, 1.0, 11)
        A = ConfigFunction.from_callable(grid, lambda q: 2 * q)
        assert A.interpolate(np.array([0.25, 3.0])) == pytest.approx([0.5, 0.0])

    def test_product(self):
        """Test pointwise products of configuration functions."""
        grid = Grid(0.0, 1.0, 11)
        A = ConfigFunction.constant(grid, 2.0) * ConfigFunction.indicator(grid, 0.0, 0.5)
        assert A.values.max() == 2.0
        assert A.values[-1] == 0.0


class TestPhysicalParams:
    """Test suite for PhysicalParams."""

    def test_defaults_are_natural_units(self):
        """Test hbar = m = M = 1 by default."""
        params = PhysicalParams()
        assert (params.hbar, params.m, params.M) == (1.0, 1.0, 1.0)

    def test_non_positive_rejected(self):
        """Test a zero hbar is rejected."""
        with pytest.raises(ValueError, match="hbar"):
            PhysicalParams(hbar=0.0)


class TestPotential:
    """Test suite for Potential."""

    def test_unknown_kind(self):
        """Test unknown families are rejected."""
        with pytest.raises(ValueError, match="unknown potential kind"):
            Potential("morse")

    @pytest.mark.parametrize("potential", [
        Potential.harmonic(1.5),
        Potential.double_well(0.5, 1.2),
        Potential("anharmonic", omega=1.0, lam=0.1),
        Potential("quartic", lam=0.3),
    ])
    def test_derivatives_match_finite_differences(self, potential):
        """Test gradient and curvature against central differences."""
        q = np.linspace(-2, 2, 9)
        h = 1e-5
        numeric_gradient = (potential.value(q + h) - potential.value(q - h)) / (2 * h)
        numeric_curvature = (potential.gradient(q + h) - potential.gradient(q - h)) / (2 * h)
        assert potential.gradient(q) == pytest.approx(numeric_gradient, abs=1e-6)
        assert potential.curvature(q) == pytest.approx(numeric_curvature, abs=1e-6)

    def test_double_well_minima(self):
        """Test the double well vanishes at +/- a."""
        potential = Potential.double_well(1.0, 1.5)
        assert potential.value(np.array([-1.5, 1.5])) == pytest.approx([0.0, 0.0])

    def test_analytic_kernel_availability(self):
        """Test which families have closed-form kernels."""
        assert Potential.free().has_analytic_kernel
        assert Potential.harmonic(1.0).has_analytic_kernel
        assert not Potential.double_well().has_analytic_kernel


class TestIntegrators:
    """Test suite for the symplectic integrators."""

    def test_harmonic_period(self):
        """Test one full period returns to the initial point."""
        result = integrate(1.0, 0.0, 2 * np.pi, 1000, Potential.harmonic(1.0))
        assert float(result.q) == pytest.approx(1.0, abs=1e-7)
        assert float(result.p) == pytest.approx(0.0, abs=1e-7)

    def test_free_action_and_tangent(self):
        """Test S = p^2 t / 2m and dq/dp0 = t/m for free motion."""
        result = integrate(0.0, 2.0, 1.5, 10, Potential.free(), tangent=True)
        assert float(result.action) == pytest.approx(3.0)
        assert float(result.dq_dp0) == pytest.approx(1.5)

    def test_harmonic_tangent(self):
        """Test dq/dp0 = sin(omega t) / (m omega)."""
        result = integrate(0.5, 0.0, 1.0, 1000, Potential.harmonic(2.0), tangent=True)
        assert float(result.dq_dp0) == pytest.approx(np.sin(2.0) / 2.0, abs=1e-8)

    def test_position_tangent_is_symplectic(self):
        """Test the full monodromy matrix of the double well has unit determinant."""
        result = integrate(-1.2, 0.4, 3.0, 3000, Potential.double_well(1.0, 1.0), tangent=True)
        determinant = result.dq_dq0 * result.dp_dp0 - result.dq_dp0 * result.dp_dq0
        assert float(determinant) == pytest.approx(1.0, abs=1e-10)

    def test_harmonic_position_tangent(self):
        """Test dq/dq0 = cos(omega t) and dp/dq0 = -m omega sin(omega t)."""
        result = integrate(0.5, 0.0, 1.0, 1000, Potential.harmonic(2.0), tangent=True)
        assert float(result.dq_dq0) == pytest.approx(np.cos(2.0), abs=1e-8)
        assert float(result.dp_dq0) == pytest.approx(-2.0 * np.sin(2.0), abs=1e-8)

    @pytest.mark.parametrize("duration,expected", [(2.0, 0), (np.pi + 0.1, 1), (2 * np.pi + 0.1, 2)])
    def test_conjugate_point_count(self, duration, expected):
        """Test focal points are counted as sign changes of dq/dp0."""
        result = integrate(0.0, 1.0, duration, 2000, Potential.harmonic(1.0), tangent=True)
        assert int(result.conjugate_points) == expected

    def test_vectorized_lanes(self):
        """Test several initial conditions integrate independently."""
        p0 = np.array([-1.0, 0.0, 1.0])
        result = integrate(np.zeros(3), p0, 1.0, 100, Potential.free())
        assert result.q == pytest.approx(p0)

    def test_energy_conserved(self):
        """Test the Verlet scheme keeps the energy bounded."""
        potential = Potential.double_well(1.0, 1.0)
        result = integrate(0.2, 0.5, 20.0, 20000, potential, scheme="verlet", record=True)
        energies = 0.5 * result.p_samples**2 + potential.value(result.q_samples)
        assert np.ptp(energies) < 1e-4
        assert result.times[-1] == pytest.approx(20.0)

    def test_invalid_duration(self):
        """Test non-positive durations are rejected."""
        with pytest.raises(ValueError, match="duration"):
            integrate(0.0, 1.0, 0.0, 10, Potential.free())

    def test_force_blow_up(self):
        """Test runaway forces raise IntegratorError."""
        with pytest.raises(IntegratorError, match="blow-up"):
            integrate(1e5, 0.0, 1.0, 10, Potential("quartic", lam=1.0))
