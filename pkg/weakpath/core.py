"""
Grids, wavefunctions and configuration-space functions.

Amplitudes are samples psi(x_j) = <x_j|psi> on a uniform grid and every
integral is the plain Riemann sum  sum_j f(x_j) * dx.  Propagator matrix
elements therefore carry an explicit dx on contraction.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import (
    GridError,
    GridMismatchError,
    NormalizationError,
    SupportEscapedError,
)

NORM_TOL = 1e-8
EDGE_POINTS = 5
EDGE_TOL = 1e-8


def _frozen(values: np.ndarray, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Uniform one-dimensional grid including both end points."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 8:
            raise GridError(f"n_points must be >= 8, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise GridError(f"empty grid [{self.x_min}, {self.x_max}]")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers of the periodic transform, FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    def index_of(self, x: float) -> int:
        """Nearest grid index; raises if x lies outside the grid."""
        if x < self.x_min - 0.5 * self.dx or x > self.x_max + 0.5 * self.dx:
            raise GridError(f"position {x} outside grid [{self.x_min}, {self.x_max}]")
        return int(np.clip(round((x - self.x_min) / self.dx), 0, self.n_points - 1))

    def require_same(self, other: "Grid") -> None:
        if self != other:
            raise GridMismatchError(f"grid mismatch: {self} vs {other}")


@dataclass(frozen=True)
class PhysicalParams:
    """Units and masses. Natural units (hbar = m = 1) by default."""

    hbar: float = 1.0
    m: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "m", "M"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex amplitudes sampled on a grid."""

    grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes, complex)
        if amps.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"amplitudes shape {amps.shape} does not match grid of {self.grid.n_points}"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)

    def normalized(self) -> "WaveFunction":
        norm2 = self.norm_squared()
        if not norm2 > 0:
            raise NormalizationError("cannot normalize a zero state")
        return WaveFunction(self.grid, self.amplitudes / np.sqrt(norm2))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_squared() - 1.0) < tol

    def require_normalized(self, tol: float = NORM_TOL) -> None:
        if not self.is_normalized(tol):
            raise NormalizationError(
                f"state not normalized: norm^2 = {self.norm_squared():.12f}"
            )

    def value_at(self, x: float) -> complex:
        """Amplitude at the grid point nearest to x."""
        return complex(self.amplitudes[self.grid.index_of(x)])

    def position_expectation(self) -> float:
        density = np.abs(self.amplitudes) ** 2
        return float(np.sum(density * self.grid.points) / np.sum(density))

    def position_variance(self) -> float:
        density = np.abs(self.amplitudes) ** 2
        mean = self.position_expectation()
        return float(np.sum(density * (self.grid.points - mean) ** 2) / np.sum(density))

    def momentum_expectation(self, params: Optional[PhysicalParams] = None) -> float:
        """<p> from the spectral derivative, -i hbar d/dx."""
        p = momentum_grid(self.grid, params)
        value = np.vdot(self.amplitudes, np.fft.ifft(p * np.fft.fft(self.amplitudes)))
        return float(value.real / np.sum(np.abs(self.amplitudes) ** 2))

    def check_support(self, edge_points: int = EDGE_POINTS, tol: float = EDGE_TOL) -> None:
        """Enforce the boundary-decay rule on both edges."""
        amps = np.abs(self.amplitudes)
        edge = float(max(amps[:edge_points].max(), amps[-edge_points:].max()))
        if edge >= tol:
            raise SupportEscapedError(
                f"support escaped grid: edge amplitude {edge:.2e} >= {tol:.0e}", edge
            )


@dataclass(frozen=True, eq=False)
class ConfigFunction:
    """Real function of configuration, sampled on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values, float)
        if vals.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"values shape {vals.shape} does not match grid of {self.grid.n_points}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("configuration function must be finite at every grid point")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> "ConfigFunction":
        return cls(grid, np.broadcast_to(func(grid.points), (grid.n_points,)))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ConfigFunction":
        return cls(grid, np.full(grid.n_points, float(value)))

    @classmethod
    def indicator(cls, grid: Grid, low: float, high: float) -> "ConfigFunction":
        x = grid.points
        return cls(grid, ((x >= low) & (x <= high)).astype(float))

    @classmethod
    def smooth_indicator(cls, grid: Grid, low: float, high: float, edge: float) -> "ConfigFunction":
        """Indicator of [low, high] with tanh edges of width `edge`; values stay in (0, 1)."""
        if not edge > 0:
            raise ValueError("edge width must be > 0")
        x = grid.points
        return cls(grid, 0.5 * (np.tanh((x - low) / edge) - np.tanh((x - high) / edge)))

    def __mul__(self, other: "ConfigFunction") -> "ConfigFunction":
        self.grid.require_same(other.grid)
        return ConfigFunction(self.grid, self.values * other.values)

    def interpolate(self, q: np.ndarray) -> np.ndarray:
        """Linear interpolation at off-grid positions, zero outside the grid."""
        return np.interp(q, self.grid.points, self.values, left=0.0, right=0.0)


def gaussian_wavepacket(
    grid: Grid,
    x0: float,
    p0: float,
    sigma: float,
    params: Optional[PhysicalParams] = None,
) -> WaveFunction:
    """
    Normalized Gaussian  exp(-(x-x0)^2 / 4 sigma^2 + i p0 x / hbar).

    Args:
        grid: Sampling grid
        x0: Center
        p0: Mean momentum
        sigma: Position standard deviation
        params: Units (hbar)

    Returns:
        WaveFunction with norm^2 = 1 on the grid

    Raises:
        GridError: If sigma is not resolved or the packet is clipped
    """
    hbar = (params or PhysicalParams()).hbar
    if sigma < 4 * grid.dx:
        raise GridError(f"sigma={sigma} unresolvable: need sigma >= 4*dx = {4 * grid.dx:.4g}")
    if x0 - 5 * sigma < grid.x_min or x0 + 5 * sigma > grid.x_max:
        raise GridError(
            f"wavepacket support [{x0 - 5 * sigma:.3g}, {x0 + 5 * sigma:.3g}] clipped by grid"
        )
    x = grid.points
    amps = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * x / hbar)
    return WaveFunction(grid, amps).normalized()


def inner_product(bra: WaveFunction, ket: WaveFunction) -> complex:
    """<bra|ket> as the Riemann sum conj(bra) * ket * dx."""
    bra.grid.require_same(ket.grid)
    return complex(np.vdot(bra.amplitudes, ket.amplitudes) * bra.grid.dx)


def expectation(psi: WaveFunction, A: ConfigFunction) -> float:
    """<psi|A|psi> for a multiplicative observable; psi must be normalized."""
    psi.grid.require_same(A.grid)
    psi.require_normalized()
    return float(np.sum(np.abs(psi.amplitudes) ** 2 * A.values) * psi.grid.dx)


def momentum_grid(grid: Grid, params: Optional[PhysicalParams] = None) -> np.ndarray:
    """Momenta hbar k conjugate to the grid, FFT ordering."""
    return (params or PhysicalParams()).hbar * grid.wavenumbers()
