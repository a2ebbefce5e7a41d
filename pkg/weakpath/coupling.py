"""
System + probe dynamics for a von Neumann coupling g(t) A(q) f(q, Q_w) P.

The probe is a continuous pointer on its own grid. The coupling switches on
as a rectangular window of duration tau around t_w whose integral is
g_total; each Strang step that falls in the window carries the interaction
as a q-conditional translation of the probe, applied exactly in the probe's
spectral basis.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .core import EDGE_POINTS, EDGE_TOL, ConfigFunction, Grid, PhysicalParams, WaveFunction, inner_product
from .exceptions import PostselectionError, SupportEscapedError
from .propagators import free_kernel, kernel_matrix, step_count, trotter_propagate
from .weak_values import InteractionProfile, WeakMeasurementSetup, weak_value_path

logger = logging.getLogger(__name__)

VALIDITY_BOUND = 0.3
SUCCESS_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class CoupledState:
    """Joint amplitude Psi(q, X), rows over the system grid."""

    system_grid: Grid
    probe_grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex, copy=True)
        if amps.shape != (self.system_grid.n_points, self.probe_grid.n_points):
            raise ValueError(f"amplitudes shape {amps.shape} does not match the grids")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def product(cls, psi: WaveFunction, phi: WaveFunction) -> "CoupledState":
        return cls(psi.grid, phi.grid, np.outer(psi.amplitudes, phi.amplitudes))

    @property
    def cell(self) -> float:
        return self.system_grid.dx * self.probe_grid.dx

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.cell)

    def check_support(self, edge_points: int = EDGE_POINTS, tol: float = EDGE_TOL) -> None:
        amps = np.abs(self.amplitudes)
        edges = (
            amps[:edge_points, :], amps[-edge_points:, :],
            amps[:, :edge_points], amps[:, -edge_points:],
        )
        edge = float(max(block.max() for block in edges))
        if edge >= tol:
            raise SupportEscapedError(f"joint support escaped grid: edge amplitude {edge:.2e}", edge)

    def project(self, b_f: WaveFunction, phi_test: WaveFunction) -> complex:
        """<b_f phi_test | Psi>."""
        self.system_grid.require_same(b_f.grid)
        self.probe_grid.require_same(phi_test.grid)
        return complex(b_f.amplitudes.conj() @ self.amplitudes @ phi_test.amplitudes.conj() * self.cell)


@dataclass(frozen=True)
class CouplingWindow:
    """Rectangular g(t) of height g_total / tau centered on t_w."""

    g_total: float
    tau: float
    t_w: float
    profile: InteractionProfile

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("coupling window duration tau must be > 0")

    def step_couplings(self, t_i: float, dt: float, n_steps: int) -> np.ndarray:
        """
        Coupling strength g_j for each Strang step.

        Steps whose midpoint lies inside the window share g_total equally, so
        sum_j g_j dt = g_total. A window narrower than one step falls on the
        step containing t_w.
        """
        midpoints = t_i + (np.arange(n_steps) + 0.5) * dt
        slack = 1e-9 * dt
        inside = np.abs(midpoints - self.t_w) <= self.tau / 2 + slack
        if not inside.any():
            logger.debug("window tau=%.3g narrower than a step; using the step at t_w", self.tau)
            inside[int(np.clip((self.t_w - t_i) // dt, 0, n_steps - 1))] = True
        g = np.zeros(n_steps)
        g[inside] = self.g_total / (inside.sum() * dt)
        return g


def coupled_evolve(
    initial: CoupledState,
    V: ConfigFunction,
    A: ConfigFunction,
    window: CouplingWindow,
    t_i: float,
    t_f: float,
    n_steps: int,
    params: Optional[PhysicalParams] = None,
    frozen_probe: bool = True,
    check_support: bool = True,
) -> CoupledState:
    """
    Strang evolution of the joint state under H_s + H_p + H_int.

    One step is H_j K H_j with H_j = exp(-i dt/2 V) exp(-i dt/2 g_j A f P / hbar)
    and K the system kinetic factor (times the probe kinetic factor unless the
    probe is frozen).

    Args:
        initial: Joint state at t_i
        V: System potential on the system grid
        A: Observable on the system grid
        window: Coupling window
        t_i: Start time
        t_f: End time
        n_steps: Number of Strang steps
        params: hbar, system mass m, probe mass M
        frozen_probe: Drop the probe kinetic term
        check_support: Enforce the boundary-decay rule on the result

    Returns:
        Joint state at t_f
    """
    params = params or PhysicalParams()
    q_grid, x_grid = initial.system_grid, initial.probe_grid
    q_grid.require_same(V.grid)
    q_grid.require_same(A.grid)
    if t_f - t_i > 0 and window.tau / (t_f - t_i) > 0.1:
        warnings.warn(
            f"coupling window tau={window.tau} is not short against t_f - t_i = {t_f - t_i}",
            UserWarning,
        )
    dt = (t_f - t_i) / n_steps
    hbar = params.hbar
    g_steps = window.step_couplings(t_i, dt, n_steps)
    coupling_shape = A.values * window.profile.on_grid(q_grid).values
    K = x_grid.wavenumbers()

    half_potential = np.exp(-0.5j * V.values * dt / hbar)[:, None]
    system_kinetic = np.exp(-0.5j * hbar * q_grid.wavenumbers() ** 2 * dt / params.m)[:, None]
    probe_kinetic = None if frozen_probe else np.exp(-0.5j * hbar * K**2 * dt / params.M)[None, :]

    def interaction(amps, g_j):
        if g_j == 0:
            return amps
        shift = 0.5 * dt * g_j * coupling_shape
        return np.fft.ifft(np.exp(-1j * shift[:, None] * K[None, :]) * np.fft.fft(amps, axis=1), axis=1)

    amps = np.array(initial.amplitudes)
    for g_j in g_steps:
        amps = interaction(half_potential * amps, g_j)
        amps = np.fft.ifft(system_kinetic * np.fft.fft(amps, axis=0), axis=0)
        if probe_kinetic is not None:
            amps = np.fft.ifft(probe_kinetic * np.fft.fft(amps, axis=1), axis=1)
        amps = interaction(half_potential * amps, g_j)

    final = CoupledState(q_grid, x_grid, amps)
    if check_support:
        final.check_support()
    return final


def postselect_probe(final: CoupledState, b_f: WaveFunction, floor: float = SUCCESS_FLOOR) -> WaveFunction:
    """
    Probe state correlated with the postselection, sum_q b_f*(q) Psi(q, X) dq.

    The result is unnormalized; its norm squared is the success probability
    for a normalized b_f.

    Raises:
        PostselectionError: If the success probability is below the floor
    """
    final.system_grid.require_same(b_f.grid)
    phi = WaveFunction(final.probe_grid, b_f.amplitudes.conj() @ final.amplitudes * final.system_grid.dx)
    probability = phi.norm_squared()
    if probability < floor:
        raise PostselectionError(f"postselection failed: success probability {probability:.2e}", probability)
    return phi


def pointer_mean_shift(before: WaveFunction, after: WaveFunction) -> float:
    """Difference of the probe position expectations."""
    before.grid.require_same(after.grid)
    return after.position_expectation() - before.position_expectation()


def probe_momentum_shift(
    before: WaveFunction, after: WaveFunction, params: Optional[PhysicalParams] = None
) -> float:
    return after.momentum_expectation(params) - before.momentum_expectation(params)


def schmidt_coefficients(state: CoupledState) -> np.ndarray:
    """Singular values of the normalized joint amplitude matrix."""
    return np.linalg.svd(state.amplitudes * np.sqrt(state.cell), compute_uv=False)


def probe_purity(state: CoupledState) -> float:
    """Tr(rho_probe^2) of the reduced probe state."""
    weights = schmidt_coefficients(state) ** 2
    return float(np.sum(weights**2) / np.sum(weights) ** 2)


def momentum_scale(phi: WaveFunction, params: Optional[PhysicalParams] = None) -> float:
    """sqrt(<P^2>) of a probe state, taken spectrally."""
    hbar = (params or PhysicalParams()).hbar
    spectrum = np.abs(np.fft.fft(phi.amplitudes)) ** 2
    return float(hbar * np.sqrt(np.sum(spectrum * phi.grid.wavenumbers() ** 2) / np.sum(spectrum)))


def validity_parameter(
    g: float, A: ConfigFunction, profile: InteractionProfile, p_typ: float, hbar: float
) -> float:
    """|g| max|A| max f p_typ / hbar; first order needs it well below one."""
    f_max = float(np.max(profile.on_grid(A.grid).values))
    return abs(g) * float(np.max(np.abs(A.values))) * f_max * p_typ / hbar


def _validity_warning(value: float) -> Optional[str]:
    if value < VALIDITY_BOUND:
        return None
    message = f"first-order expansion questionable: validity parameter {value:.3g} >= {VALIDITY_BOUND}"
    warnings.warn(message, UserWarning)
    return message


@dataclass(frozen=True)
class PerturbativeTerm:
    """Zeroth plus first order in g, with the validity diagnostic."""

    zeroth: complex
    first_order: complex
    validity: float
    warning: Optional[str] = None

    @property
    def value(self) -> complex:
        return self.zeroth + self.first_order


def perturbative_kernel(
    x2: float,
    X2: float,
    x1: float,
    X1: float,
    window: CouplingWindow,
    A: ConfigFunction,
    potential,
    t_i: float,
    t_f: float,
    params: Optional[PhysicalParams] = None,
    method: str = "trotter",
    dt: float = 0.01,
) -> PerturbativeTerm:
    """
    Coupled kernel K(x2 X2, t_f; x1 X1, t_i) to first order in g_total.

    The probe is free with mass M, so P acting on its kernel is the
    classical momentum M (X2 - X1) / (t_f - t_i); the system paths are
    weighed by A(q) f(q, Q_w) at t_w.
    """
    params = params or PhysicalParams()
    grid = A.grid
    k_before = kernel_matrix(grid, potential, t_i, window.t_w, params, method, dt)
    k_after = kernel_matrix(grid, potential, window.t_w, t_f, params, method, dt)
    if method == "trotter":
        k_total = k_after.compose(k_before)
    else:
        k_total = kernel_matrix(grid, potential, t_i, t_f, params, method, dt)
    i1, i2 = grid.index_of(x1), grid.index_of(x2)

    duration = t_f - t_i
    probe = complex(free_kernel(X2, X1, duration, PhysicalParams(params.hbar, params.M, params.M)))
    probe_momentum = params.M * (X2 - X1) / duration
    weight = A.values * window.profile.on_grid(grid).values
    weighed_paths = complex(np.sum(k_after.entries[i2, :] * weight * k_before.entries[:, i1]) * grid.dx)

    validity = validity_parameter(window.g_total, A, window.profile, abs(probe_momentum), params.hbar)
    return PerturbativeTerm(
        zeroth=probe * complex(k_total.entries[i2, i1]),
        first_order=-1j * window.g_total / params.hbar * probe_momentum * probe * weighed_paths,
        validity=validity,
        warning=_validity_warning(validity),
    )


def perturbative_matrix_element(
    psi_i: WaveFunction,
    b_f: WaveFunction,
    phi_i: WaveFunction,
    phi_test: WaveFunction,
    A: ConfigFunction,
    window: CouplingWindow,
    V: ConfigFunction,
    t_i: float,
    t_f: float,
    n_steps: int,
    params: Optional[PhysicalParams] = None,
    resolved: bool = True,
) -> PerturbativeTerm:
    """
    <b_f phi_test| U_int |psi_i phi_i> to first order in g for a frozen probe.

    resolved=False uses the effective coupling at t_w alone. resolved=True
    keeps the time structure of the window: every step boundary k inside it
    contributes (dt/2)(g_{k-1} + g_k) times the weighed system amplitude at
    that boundary, which is the exact first-order term of coupled_evolve.
    """
    params = params or PhysicalParams()
    hbar = params.hbar
    dt = (t_f - t_i) / n_steps
    weight = A.values * window.profile.on_grid(A.grid).values

    k_phi = phi_i.grid.wavenumbers()
    p_phi = WaveFunction(phi_i.grid, np.fft.ifft(hbar * k_phi * np.fft.fft(phi_i.amplitudes)))
    probe_factor = inner_product(phi_test, p_phi)
    zeroth = inner_product(b_f, trotter_propagate(psi_i, V, t_f - t_i, n_steps, params)) * inner_product(
        phi_test, phi_i
    )

    def weighed(k: int) -> complex:
        psi_k = psi_i if k == 0 else trotter_propagate(psi_i, V, k * dt, k, params)
        if k == n_steps:
            beta_k = b_f
        else:
            beta_k = trotter_propagate(b_f, V, -(n_steps - k) * dt, n_steps - k, params)
        return inner_product(beta_k, WaveFunction(psi_k.grid, weight * psi_k.amplitudes))

    if resolved:
        g = np.concatenate([[0.0], window.step_couplings(t_i, dt, n_steps), [0.0]])
        boundary_weights = 0.5 * dt * (g[:-1] + g[1:])
        system_term = sum(
            w * weighed(k) for k, w in enumerate(boundary_weights) if w != 0
        )
    else:
        system_term = window.g_total * weighed(step_count(window.t_w - t_i, dt))

    validity = validity_parameter(window.g_total, A, window.profile, momentum_scale(phi_i, params), hbar)
    return PerturbativeTerm(
        zeroth=zeroth,
        first_order=-1j / hbar * system_term * probe_factor,
        validity=validity,
        warning=_validity_warning(validity),
    )


@dataclass
class PointerReport:
    """Outcome of one weak-measurement pipeline run."""

    g: float
    tau: float
    Q_w: float
    shift: float
    momentum_shift: float
    success_probability: float
    Re_Aw_ref: float
    extra: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        record = {
            "g": self.g,
            "tau": self.tau,
            "Q_w": self.Q_w,
            "shift": self.shift,
            "momentum_shift": self.momentum_shift,
            "success_probability": self.success_probability,
            "Re_Aw_ref": self.Re_Aw_ref,
        }
        record.update(self.extra)
        return record


def run_pointer_pipeline(
    setup: WeakMeasurementSetup,
    phi_i: WaveFunction,
    tau: float,
    frozen_probe: bool = True,
) -> PointerReport:
    """
    Couple, evolve, postselect and read the pointer.

    The step size is setup.dt and t_w falls on a step boundary, so the
    window and the weak-value reference share one step sequence.
    """
    n_steps = setup.steps_before + setup.steps_after
    window = CouplingWindow(setup.g, tau, setup.t_w, setup.profile)
    initial = CoupledState.product(setup.psi_i, phi_i)
    final = coupled_evolve(
        initial, setup.V, setup.A, window, setup.t_i, setup.t_f, n_steps,
        setup.params, frozen_probe=frozen_probe,
    )
    drift = abs(final.norm_squared() - initial.norm_squared())
    if drift > 1e-9:
        logger.warning("joint norm drifted by %.2e", drift)
    phi_f = postselect_probe(final, setup.b_f)
    reference = weak_value_path(setup).value
    report = PointerReport(
        g=setup.g,
        tau=tau,
        Q_w=setup.profile.Q_w,
        shift=pointer_mean_shift(phi_i, phi_f),
        momentum_shift=probe_momentum_shift(phi_i, phi_f, setup.params),
        success_probability=phi_f.norm_squared(),
        Re_Aw_ref=reference.real,
        extra={"Im_Aw_ref": reference.imag},
    )
    logger.info("pointer shift %.6g at g=%.4g (g Re Aw = %.6g)", report.shift, setup.g, setup.g * reference.real)
    return report


def extrapolate_shift_slope(shifts: Dict[float, float]) -> float:
    """
    Richardson estimate of lim_{g -> 0} shift / g from the two smallest g.

    Raises:
        ValueError: With fewer than two distinct couplings
    """
    couplings = sorted(g for g in shifts if g != 0)
    if len(couplings) < 2:
        raise ValueError("need shifts at two distinct nonzero couplings")
    g1, g2 = couplings[0], couplings[1]
    r1, r2 = shifts[g1] / g1, shifts[g2] / g2
    return (g2 * r1 - g1 * r2) / (g2 - g1)
