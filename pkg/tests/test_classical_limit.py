"""
Tests for the classical ensemble and its postselected probe shift.
"""

import numpy as np
import pytest

from weakpath.classical_limit import (
    ClassicalEnsemble,
    PostselectionDomain,
    ShiftReport,
    classical_probe_kick,
    coherence_decay,
    conditional_pointer_shift,
    liouville_evolve,
    unconditioned_average_kick,
)
from weakpath.core import ConfigFunction, Grid, PhysicalParams, gaussian_wavepacket
from weakpath.exceptions import PostselectionError
from weakpath.potentials import Potential
from weakpath.weak_values import InteractionProfile


@pytest.fixture
def position_observable():
    grid = Grid(-10.0, 10.0, 401)
    return ConfigFunction.from_callable(grid, lambda x: x)


class TestClassicalEnsemble:
    """Test suite for ClassicalEnsemble."""

    def test_uniform_weights(self):
        """Test samples get equal weights summing to one."""
        ens = ClassicalEnsemble.from_samples([0.0, 1.0, 2.0, 3.0], [0.0, 0.0, 0.0, 0.0])
        assert len(ens) == 4
        assert ens.w == pytest.approx([0.25] * 4)

    def test_weights_must_sum_to_one(self):
        """Test unnormalized weights are rejected."""
        with pytest.raises(ValueError, match="sum to"):
            ClassicalEnsemble([0.0, 1.0], [0.0, 0.0], [0.5, 0.6])

    def test_negative_weights(self):
        """Test negative weights are rejected."""
        with pytest.raises(ValueError, match="non-negative"):
            ClassicalEnsemble([0.0, 1.0], [0.0, 0.0], [1.5, -0.5])

    def test_shape_mismatch(self):
        """Test q, p and w must line up."""
        with pytest.raises(ValueError, match="equal length"):
            ClassicalEnsemble([0.0, 1.0], [0.0], [0.5, 0.5])

    def test_gaussian_seed_reproducible(self):
        """Test the same seed draws the same ensemble."""
        first = ClassicalEnsemble.from_gaussian(0.0, 1.0, 0.5, 100, seed=7)
        second = ClassicalEnsemble.from_gaussian(0.0, 1.0, 0.5, 100, seed=7)
        assert np.array_equal(first.q, second.q)
        assert np.array_equal(first.p, second.p)

    def test_gaussian_momentum_spread(self):
        """Test the momentum spread is hbar / (2 sigma)."""
        ens = ClassicalEnsemble.from_gaussian(0.0, 0.0, 0.5, 50000, seed=1, params=PhysicalParams(hbar=2.0))
        assert np.std(ens.p) == pytest.approx(2.0, rel=0.02)

    def test_frame_round_trip(self):
        """Test the frame keeps samples and weights."""
        ens = ClassicalEnsemble.from_gaussian(0.0, 0.0, 1.0, 10, seed=3)
        back = ClassicalEnsemble.from_frame(ens.to_frame())
        assert np.array_equal(back.q, ens.q)
        assert list(ens.to_frame().columns) == ["q", "p", "w"]


class TestLiouvilleEvolution:
    """Test suite for transporting ensembles."""

    def test_free_motion(self):
        """Test free samples move in straight lines."""
        ens = ClassicalEnsemble.from_samples([0.0, 1.0], [1.0, -2.0])
        out = liouville_evolve(ens, Potential.free(), 1.5)
        assert out.q == pytest.approx([1.5, -2.0])
        assert out.p == pytest.approx([1.0, -2.0])
        assert out.time_tag == pytest.approx(1.5)

    def test_harmonic_quarter_period(self):
        """Test position turns into momentum after a quarter period."""
        ens = ClassicalEnsemble.from_samples([1.0], [0.0])
        out = liouville_evolve(ens, Potential.harmonic(1.0), np.pi / 2, dt=0.005)
        assert out.q[0] == pytest.approx(0.0, abs=1e-7)
        assert out.p[0] == pytest.approx(-1.0, abs=1e-7)

    def test_zero_duration(self):
        """Test a zero duration returns the ensemble unchanged."""
        ens = ClassicalEnsemble.from_samples([0.3], [0.1])
        assert liouville_evolve(ens, Potential.free(), 0.0) is ens


class TestPointerShift:
    """Test suite for the postselected classical pointer shift."""

    def test_unconditioned_kick(self, position_observable):
        """Test the plain average kick is g <A>."""
        ens = ClassicalEnsemble.from_samples([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
        kick = unconditioned_average_kick(ens, position_observable, InteractionProfile(0.0, uniform=True), 0.1)
        assert kick == pytest.approx(0.2)

    def test_contact_kick(self, position_observable):
        """Test the contact cell kicks only samples at Q_w."""
        kicks = classical_probe_kick(
            np.array([1.0, 3.0]), position_observable, InteractionProfile(1.0), 1.0, cell_width=0.5
        )
        assert kicks == pytest.approx([2.0, 0.0])

    def test_half_space_oracle(self, position_observable):
        """Test E[q | q + p > 0] = 1 / sqrt(pi) for a unit Gaussian with hbar = 2."""
        ens = ClassicalEnsemble.from_gaussian(0.0, 0.0, 1.0, 100000, seed=11, params=PhysicalParams(hbar=2.0))
        report = conditional_pointer_shift(
            ens,
            position_observable,
            InteractionProfile(0.0, uniform=True),
            1.0,
            PostselectionDomain.half_space(0.0),
            Potential.free(),
            1.0,
        )
        assert report.acceptance_fraction == pytest.approx(0.5, abs=0.01)
        assert abs(report.shift - 1 / np.sqrt(np.pi)) < 4 * report.standard_error
        assert report.standard_error < 0.01

    def test_accept_everything(self, position_observable):
        """Test the trivial domain reproduces the unconditioned kick."""
        ens = ClassicalEnsemble.from_gaussian(0.5, 0.0, 1.0, 1000, seed=2)
        profile = InteractionProfile(0.0, uniform=True)
        report = conditional_pointer_shift(
            ens, position_observable, profile, 0.3, PostselectionDomain.everything(), Potential.free(), 1.0
        )
        assert report.acceptance_fraction == pytest.approx(1.0)
        assert report.shift == pytest.approx(unconditioned_average_kick(ens, position_observable, profile, 0.3))

    def test_empty_acceptance(self, position_observable):
        """Test a domain nothing reaches raises PostselectionError."""
        ens = ClassicalEnsemble.from_samples([0.0, 0.1], [0.0, 0.0])
        with pytest.raises(PostselectionError) as exc_info:
            conditional_pointer_shift(
                ens,
                position_observable,
                InteractionProfile(0.0, uniform=True),
                1.0,
                PostselectionDomain.interval(5.0, 6.0),
                Potential.free(),
                1.0,
            )
        assert exc_info.value.fraction == 0.0

    def test_report_dict(self):
        """Test the report keys."""
        assert set(ShiftReport(0.1, 0.01, 0.5, 10).to_dict()) == {
            "shift",
            "standard_error",
            "acceptance_fraction",
            "n_accepted",
        }


class TestCoherenceDecay:
    """Test suite for coarse-grained coherence."""

    @pytest.fixture
    def grid(self):
        return Grid(-8.0, 8.0, 512)

    def test_decays_with_hbar(self, grid):
        """Test coarse-grained coherence shrinks as hbar goes to zero."""
        values = [
            coherence_decay(gaussian_wavepacket(grid, 0.0, 2.0, 1.0, PhysicalParams(hbar=hbar)), 0.5)
            for hbar in (1.0, 0.5, 0.25)
        ]
        assert values[0] > values[1] > values[2]

    def test_scale_below_spacing(self, grid):
        """Test an unresolved coarse-graining scale is rejected."""
        psi = gaussian_wavepacket(grid, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError, match="grid spacing"):
            coherence_decay(psi, grid.dx / 4)


class TestNoAnomaly:
    """Classical conditional shifts never leave the range of the kick."""

    @pytest.mark.parametrize("seed", range(20))
    def test_shift_within_kick_range(self, seed):
        """Test randomized conditional shifts lie within [min, max] of g A f on the accepted set."""
        rng = np.random.default_rng(seed)
        grid = Grid(-10.0, 10.0, 401)
        A = ConfigFunction.from_callable(grid, np.tanh)
        profile = InteractionProfile(rng.uniform(-1.0, 1.0), width=rng.uniform(0.3, 1.0))
        ens = ClassicalEnsemble.from_gaussian(rng.uniform(-1, 1), rng.uniform(-1, 1), 1.0, 500, seed=seed)
        potential = Potential.harmonic(1.0) if seed % 2 else Potential.free()
        domain = PostselectionDomain.interval(-1.5, rng.uniform(0.0, 1.5))
        report = conditional_pointer_shift(ens, A, profile, 0.5, domain, potential, 0.8, dt=0.02)
        accepted = domain.accepts(liouville_evolve(ens, potential, 0.8, dt=0.02).q)
        kicks = classical_probe_kick(ens.q[accepted], A, profile, 0.5)
        assert kicks.min() - 1e-12 <= report.shift <= kicks.max() + 1e-12
