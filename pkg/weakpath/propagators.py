"""
Uncoupled propagators: closed-form kernels, split-step propagation, and a
brute-force lattice path sum.

Kernel matrices follow one convention throughout: entries[i, j] is
K(x_i; x_j) (row = destination, column = source) and contraction carries
dx, so  psi_out = K @ psi_in * dx  and on-grid unitarity reads
K^dagger K dx^2 = I.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy.linalg import expm

from .core import ConfigFunction, Grid, PhysicalParams, WaveFunction
from .exceptions import BudgetExceededError, CausticError, GridError
from .potentials import Potential

logger = logging.getLogger(__name__)

CAUSTIC_TOL = 1e-9
MAX_PATH_STEPS = 4
MAX_PATHS = 4_000_000


def step_count(duration: float, dt: float) -> int:
    """Number of Strang steps used for an interval of the given length."""
    return max(1, int(round(abs(duration) / dt)))


def free_kernel(x2, x1, dt: float, params: Optional[PhysicalParams] = None):
    """
    Free-particle propagator  sqrt(m / 2 pi i hbar dt) exp(i m (x2-x1)^2 / 2 hbar dt).

    Raises:
        ValueError: If dt == 0
    """
    if dt == 0:
        raise ValueError("free kernel at dt = 0 is a delta function, not representable pointwise")
    p = params or PhysicalParams()
    x2 = np.asarray(x2, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    prefactor = np.sqrt(p.m / (2j * np.pi * p.hbar * dt))
    return prefactor * np.exp(1j * p.m * (x2 - x1) ** 2 / (2 * p.hbar * dt))


def harmonic_kernel(x2, x1, dt: float, omega: float, params: Optional[PhysicalParams] = None):
    """
    Mehler kernel of the harmonic oscillator, valid across caustics.

    The phase -pi/4 - n pi/2 with n = floor(omega dt / pi) carries the
    Maslov jumps of the exact kernel.

    Raises:
        CausticError: If omega*dt is (numerically) a multiple of pi
    """
    if omega == 0:
        return free_kernel(x2, x1, dt, params)
    if dt <= 0:
        raise ValueError("harmonic kernel requires dt > 0")
    p = params or PhysicalParams()
    phase = omega * dt
    n_caustics = int(np.floor(phase / np.pi))
    distance = min(phase - n_caustics * np.pi, (n_caustics + 1) * np.pi - phase)
    if distance < CAUSTIC_TOL:
        raise CausticError(
            f"focal point: omega*dt = {phase:.12g} is a multiple of pi",
            conjugate_time=round(phase / np.pi) * np.pi / omega,
        )
    x2 = np.asarray(x2, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    s, c = np.sin(phase), np.cos(phase)
    modulus = np.sqrt(p.m * omega / (2 * np.pi * p.hbar * abs(s)))
    action = p.m * omega / (2 * s) * ((x1**2 + x2**2) * c - 2 * x1 * x2)
    return modulus * np.exp(1j * (action / p.hbar - np.pi / 4 - n_caustics * np.pi / 2))


def analytic_kernel(potential: Potential, x2, x1, dt: float, params: Optional[PhysicalParams] = None):
    if potential.kind == "free":
        return free_kernel(x2, x1, dt, params)
    if potential.kind == "harmonic":
        return harmonic_kernel(x2, x1, dt, potential.omega, params)
    raise ValueError(f"no closed-form kernel for potential kind {potential.kind!r}")


def _strang_phases(grid: Grid, V: np.ndarray, dt: float, params: PhysicalParams):
    k = grid.wavenumbers()
    half_potential = np.exp(-0.5j * V * dt / params.hbar)
    kinetic = np.exp(-0.5j * params.hbar * k**2 * dt / params.m)
    return half_potential, kinetic


def trotter_propagate(
    psi: WaveFunction,
    V: ConfigFunction,
    t_span: float,
    n_steps: int,
    params: Optional[PhysicalParams] = None,
    check_support: bool = True,
) -> WaveFunction:
    """
    Strang split-step propagation  e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}.

    The kinetic factor is applied spectrally. A negative t_span runs the
    exact inverse step sequence.

    Args:
        psi: Initial state
        V: Potential on the same grid
        t_span: Duration (may be negative)
        n_steps: Number of Strang steps
        params: Units and mass
        check_support: Enforce the boundary-decay rule on the result

    Returns:
        Propagated state
    """
    psi.grid.require_same(V.grid)
    params = params or PhysicalParams()
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if t_span == 0:
        return WaveFunction(psi.grid, psi.amplitudes)
    dt = t_span / n_steps
    if np.max(np.abs(V.values)) * abs(dt) / params.hbar > 0.1:
        logger.debug("max|V| dt / hbar = %.3g exceeds 0.1", np.max(np.abs(V.values)) * abs(dt))
    half_potential, kinetic = _strang_phases(psi.grid, V.values, dt, params)
    amps = np.array(psi.amplitudes)
    for _ in range(n_steps):
        amps = half_potential * amps
        amps = np.fft.ifft(kinetic * np.fft.fft(amps))
        amps = half_potential * amps
    result = WaveFunction(psi.grid, amps)
    if check_support:
        result.check_support()
    return result


def step_matrix(V: ConfigFunction, dt: float, params: Optional[PhysicalParams] = None) -> np.ndarray:
    """Dense unitary matrix of one Strang step acting on amplitude vectors."""
    params = params or PhysicalParams()
    grid = V.grid
    half_potential, kinetic = _strang_phases(grid, V.values, dt, params)
    identity = np.eye(grid.n_points, dtype=complex)
    kinetic_matrix = np.fft.ifft(kinetic[:, None] * np.fft.fft(identity, axis=0), axis=0)
    return half_potential[:, None] * kinetic_matrix * half_potential[None, :]


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """K(x2, t_to; x1, t_from) on a grid, rows = destination."""

    grid: Grid
    t_from: float
    t_to: float
    entries: np.ndarray

    def apply(self, psi: WaveFunction) -> WaveFunction:
        self.grid.require_same(psi.grid)
        return WaveFunction(self.grid, self.entries @ psi.amplitudes * self.grid.dx)

    def compose(self, earlier: "KernelMatrix") -> "KernelMatrix":
        """Chapman-Kolmogorov: K(t3,t2) K(t2,t1) dx."""
        self.grid.require_same(earlier.grid)
        if not np.isclose(earlier.t_to, self.t_from):
            raise ValueError(f"cannot compose: {earlier.t_to} != {self.t_from}")
        return KernelMatrix(
            self.grid, earlier.t_from, self.t_to, self.entries @ earlier.entries * self.grid.dx
        )

    def unitarity_defect(self) -> float:
        """max |K^dagger K dx^2 - I|."""
        u = self.entries * self.grid.dx
        return float(np.max(np.abs(u.conj().T @ u - np.eye(self.grid.n_points))))

    def to_frame(self) -> pd.DataFrame:
        x = self.grid.points
        x2, x1 = np.meshgrid(x, x, indexing="ij")
        return pd.DataFrame({
            "x2": x2.ravel(),
            "x1": x1.ravel(),
            "re": self.entries.real.ravel(),
            "im": self.entries.imag.ravel(),
        })


def kernel_matrix(
    grid: Grid,
    potential: Potential,
    t_from: float,
    t_to: float,
    params: Optional[PhysicalParams] = None,
    method: str = "trotter",
    dt: float = 0.01,
) -> KernelMatrix:
    """
    Build K(t_to; t_from) on the grid.

    method="trotter" raises the Strang step matrix to the same step count
    trotter_propagate uses, so both engines agree to round-off.
    method="analytic" samples the closed-form free or Mehler kernel.
    """
    params = params or PhysicalParams()
    duration = t_to - t_from
    if method == "analytic":
        x = grid.points
        entries = analytic_kernel(potential, x[:, None], x[None, :], duration, params)
    elif method == "trotter":
        n_steps = step_count(duration, dt)
        step = step_matrix(potential.on_grid(grid), duration / n_steps, params)
        entries = np.linalg.matrix_power(step, n_steps) / grid.dx
    else:
        raise ValueError(f"unknown kernel method {method!r}")
    return KernelMatrix(grid, t_from, t_to, entries)


def dense_evolution_operator(
    V: ConfigFunction, duration: float, params: Optional[PhysicalParams] = None
) -> np.ndarray:
    """exp(-i H t / hbar) with the spectral kinetic matrix; independent dense oracle."""
    params = params or PhysicalParams()
    grid = V.grid
    k = grid.wavenumbers()
    identity = np.eye(grid.n_points, dtype=complex)
    kinetic = np.fft.ifft(
        (params.hbar**2 * k**2 / (2 * params.m))[:, None] * np.fft.fft(identity, axis=0), axis=0
    )
    hamiltonian = kinetic + np.diag(V.values)
    return expm(-1j * hamiltonian * duration / params.hbar)


def step_kernel(
    V: ConfigFunction,
    dt: float,
    params: Optional[PhysicalParams] = None,
    scheme: str = "midpoint",
) -> np.ndarray:
    """
    Short-time kernel matrix for one lattice step.

    "midpoint": free kernel times exp(-i V((xa+xb)/2) dt / hbar).
    "spectral": Strang step matrix / dx, identical to one trotter step.
    """
    params = params or PhysicalParams()
    grid = V.grid
    if scheme == "spectral":
        return step_matrix(V, dt, params) / grid.dx
    if scheme != "midpoint":
        raise ValueError(f"unknown step scheme {scheme!r}")
    x = grid.points
    xb, xa = x[:, None], x[None, :]
    midpoint_v = V.interpolate((xa + xb) / 2)
    return free_kernel(xb, xa, dt, params) * np.exp(-1j * midpoint_v * dt / params.hbar)


def lattice_path_sum(
    x2: float,
    x1: float,
    n_steps: int,
    V: ConfigFunction,
    dt_step: float,
    params: Optional[PhysicalParams] = None,
    scheme: str = "midpoint",
    max_paths: int = MAX_PATHS,
) -> complex:
    """
    Sum over every lattice path x1 -> q_1 -> ... -> q_{n-1} -> x2.

    Each path is weighted by the product of short-time kernels with a dx per
    intermediate point. Intended as a brute-force oracle on tiny grids.

    Raises:
        BudgetExceededError: If n_steps > 4 or the path count exceeds max_paths
    """
    grid = V.grid
    n = grid.n_points
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    n_intermediate = n_steps - 1
    if n_steps > MAX_PATH_STEPS or n**n_intermediate > max_paths:
        raise BudgetExceededError(
            f"{n}^{n_intermediate} lattice paths exceed the budget of {max_paths}"
        )
    i1, i2 = grid.index_of(x1), grid.index_of(x2)
    if not (np.isclose(grid.points[i1], x1) and np.isclose(grid.points[i2], x2)):
        raise GridError("lattice path end points must be grid points")
    kernel = step_kernel(V, dt_step, params, scheme)
    if n_intermediate == 0:
        return complex(kernel[i2, i1])

    paths = np.indices((n,) * n_intermediate).reshape(n_intermediate, -1)
    weights = kernel[paths[0], i1]
    for level in range(1, n_intermediate):
        weights = weights * kernel[paths[level], paths[level - 1]]
    weights = weights * kernel[i2, paths[-1]]
    return complex(np.sum(weights) * grid.dx**n_intermediate)
