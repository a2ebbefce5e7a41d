"""
Weak values by the operator route and the path-integral route, the
contact-coupling ratio T_w/T, and inference of propagators from weak values.
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Optional

import numpy as np
import pandas as pd

from .core import ConfigFunction, Grid, PhysicalParams, WaveFunction, inner_product
from .exceptions import DenominatorUnderflowError, GridError, NodeAtCouplingPointError
from .potentials import Potential
from .propagators import KernelMatrix, kernel_matrix, step_count, trotter_propagate

logger = logging.getLogger(__name__)

DENOMINATOR_FLOOR = 1e-10


@dataclass(frozen=True)
class InteractionProfile:
    """
    Range function f(q, Q_w) of the coupling.

    width = 0 is the contact limit, one grid cell of height 1/dx. A positive
    width gives a normalized Gaussian. uniform=True is the global coupling
    f = 1 of the textbook von Neumann interaction (not normalized).
    """

    Q_w: float
    width: float = 0.0
    uniform: bool = False

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("profile width must be >= 0")

    @property
    def kind(self) -> str:
        if self.uniform:
            return "uniform"
        return "contact" if self.width == 0 else "gaussian"

    def on_grid(self, grid: Grid) -> ConfigFunction:
        if self.uniform:
            return ConfigFunction.constant(grid, 1.0)
        values = np.zeros(grid.n_points)
        if self.width == 0:
            values[grid.index_of(self.Q_w)] = 1.0 / grid.dx
            return ConfigFunction(grid, values)
        if self.width < grid.dx:
            raise GridError(f"profile width {self.width} below grid spacing {grid.dx:.4g}")
        values = np.exp(-((grid.points - self.Q_w) ** 2) / (2 * self.width**2))
        return ConfigFunction(grid, values / (np.sum(values) * grid.dx))

    def evaluate(self, q, cell_width: float) -> np.ndarray:
        """f at arbitrary positions; the contact cell has the given width."""
        q = np.asarray(q, dtype=float)
        if self.uniform:
            return np.ones_like(q)
        if self.width == 0:
            return (np.abs(q - self.Q_w) <= cell_width / 2) / cell_width
        return np.exp(-((q - self.Q_w) ** 2) / (2 * self.width**2)) / (
            np.sqrt(2 * np.pi) * self.width
        )


@dataclass(frozen=True)
class WeakValue:
    """A^w = numerator / denominator."""

    value: complex
    numerator: complex
    denominator: complex

    @classmethod
    def from_ratio(
        cls, numerator: complex, denominator: complex, floor: float = DENOMINATOR_FLOOR
    ) -> "WeakValue":
        if not abs(denominator) > floor:
            raise DenominatorUnderflowError(complex(numerator), complex(denominator), floor)
        return cls(complex(numerator / denominator), complex(numerator), complex(denominator))

    def to_record(self, setup_hash: str = "") -> Dict:
        return {
            "setup_hash": setup_hash,
            "re": self.value.real,
            "im": self.value.imag,
            "numerator": [self.numerator.real, self.numerator.imag],
            "denominator": [self.denominator.real, self.denominator.imag],
        }


@dataclass(frozen=True, eq=False)
class WeakMeasurementSetup:
    """Pre/postselection, coupling and dynamics of one weak measurement."""

    psi_i: WaveFunction
    b_f: WaveFunction
    t_i: float
    t_w: float
    t_f: float
    A: ConfigFunction
    profile: InteractionProfile
    g: float = 0.01
    potential: Potential = field(default_factory=Potential.free)
    params: PhysicalParams = field(default_factory=PhysicalParams)
    dt: float = 0.01
    denominator_floor: float = DENOMINATOR_FLOOR

    def __post_init__(self):
        if not self.t_i < self.t_w < self.t_f:
            raise ValueError(f"need t_i < t_w < t_f, got {self.t_i}, {self.t_w}, {self.t_f}")
        self.psi_i.grid.require_same(self.b_f.grid)
        self.psi_i.grid.require_same(self.A.grid)

    @property
    def grid(self) -> Grid:
        return self.psi_i.grid

    @property
    def V(self) -> ConfigFunction:
        return self.potential.on_grid(self.grid)

    @property
    def steps_before(self) -> int:
        return step_count(self.t_w - self.t_i, self.dt)

    @property
    def steps_after(self) -> int:
        return step_count(self.t_f - self.t_w, self.dt)

    def state_at_tw(self) -> WaveFunction:
        return trotter_propagate(self.psi_i, self.V, self.t_w - self.t_i, self.steps_before, self.params)

    def evolved_preselection(self) -> WaveFunction:
        """U(t_f, t_i) psi_i on the same step sequence the weak-value routes use."""
        return trotter_propagate(self.state_at_tw(), self.V, self.t_f - self.t_w, self.steps_after, self.params)

    def localized_observable(self) -> ConfigFunction:
        """A(q) f(q, Q_w): the multiplicative operator the path numerator weighs with."""
        return self.A * self.profile.on_grid(self.grid)

    def hash(self) -> str:
        digest = hashlib.sha256()
        for arr in (self.psi_i.amplitudes, self.b_f.amplitudes, self.A.values):
            digest.update(np.ascontiguousarray(arr).tobytes())
        digest.update(repr((
            self.grid, self.t_i, self.t_w, self.t_f, self.profile, self.g,
            self.potential, self.params, self.dt,
        )).encode())
        return digest.hexdigest()[:16]


def weak_value_operator(
    setup: WeakMeasurementSetup, observable: Optional[ConfigFunction] = None
) -> WeakValue:
    """
    <b_f| U(t_f,t_w) A U(t_w,t_i) |psi_i> / <b_f| U(t_f,t_i) |psi_i>.

    A one-cell contact profile is a spike that spreads over the whole grid
    in any finite time, so contact weak values go through weak_value_path.

    Args:
        setup: The weak measurement
        observable: Multiplicative operator; defaults to setup.A

    Raises:
        DenominatorUnderflowError: If the denominator is below the floor
        SupportEscapedError: If A psi(t_w) evolved to t_f reaches the grid edge
    """
    A = observable if observable is not None else setup.A
    psi_w = setup.state_at_tw()
    coupled = WaveFunction(setup.grid, A.values * psi_w.amplitudes)
    remaining = setup.t_f - setup.t_w
    numerator_state = trotter_propagate(coupled, setup.V, remaining, setup.steps_after, setup.params)
    direct_state = trotter_propagate(psi_w, setup.V, remaining, setup.steps_after, setup.params)
    return WeakValue.from_ratio(
        inner_product(setup.b_f, numerator_state),
        inner_product(setup.b_f, direct_state),
        setup.denominator_floor,
    )


class PathIntegralEngine:
    """
    Kernel matrices for one (grid, potential, times) triple.

    Kernels do not depend on the pre/postselection or on the profile, so an
    engine is shared across Q_w and x_f scans.
    """

    def __init__(
        self,
        grid: Grid,
        potential: Potential,
        t_i: float,
        t_w: float,
        t_f: float,
        params: Optional[PhysicalParams] = None,
        kernel_method: str = "trotter",
        dt: float = 0.01,
    ):
        self.grid = grid
        self.potential = potential
        self.t_i, self.t_w, self.t_f = t_i, t_w, t_f
        self.params = params or PhysicalParams()
        self.kernel_method = kernel_method
        self.dt = dt

    @classmethod
    def from_setup(cls, setup: WeakMeasurementSetup, kernel_method: str = "trotter") -> "PathIntegralEngine":
        return cls(
            setup.grid, setup.potential, setup.t_i, setup.t_w, setup.t_f,
            setup.params, kernel_method, setup.dt,
        )

    def _kernel(self, t_from: float, t_to: float) -> KernelMatrix:
        logger.debug("building %s kernel %.4g -> %.4g", self.kernel_method, t_from, t_to)
        return kernel_matrix(
            self.grid, self.potential, t_from, t_to, self.params, self.kernel_method, self.dt
        )

    @cached_property
    def k_before(self) -> KernelMatrix:
        return self._kernel(self.t_i, self.t_w)

    @cached_property
    def k_after(self) -> KernelMatrix:
        return self._kernel(self.t_w, self.t_f)

    @cached_property
    def k_total(self) -> KernelMatrix:
        if self.kernel_method == "trotter":
            return self.k_after.compose(self.k_before)
        return self._kernel(self.t_i, self.t_f)

    def state_at_tw(self, psi_i: WaveFunction) -> WaveFunction:
        return self.k_before.apply(psi_i)

    def state_at_tf(self, psi_i: WaveFunction) -> WaveFunction:
        return self.k_total.apply(psi_i)

    def postselection_row(self, b_f: WaveFunction) -> np.ndarray:
        """chi(q) = int dx_f b_f*(x_f) K(x_f, t_f; q, t_w)."""
        return b_f.amplitudes.conj() @ self.k_after.entries * self.grid.dx

    def denominator(self, psi_i: WaveFunction, b_f: WaveFunction) -> complex:
        return inner_product(b_f, self.state_at_tf(psi_i))

    def numerator(self, psi_i: WaveFunction, b_f: WaveFunction, weight: np.ndarray) -> complex:
        """int dq chi(q) weight(q) psi(q, t_w)."""
        chi = self.postselection_row(b_f)
        psi_w = self.state_at_tw(psi_i).amplitudes
        return complex(np.sum(chi * weight * psi_w) * self.grid.dx)


def weak_value_path(
    setup: WeakMeasurementSetup, engine: Optional[PathIntegralEngine] = None
) -> WeakValue:
    """
    Path-integral weak value: paths through the interaction region weighed
    by A(q) f(q, Q_w), over all direct paths.
    """
    engine = engine or PathIntegralEngine.from_setup(setup)
    weight = setup.localized_observable().values
    return WeakValue.from_ratio(
        engine.numerator(setup.psi_i, setup.b_f, weight),
        engine.denominator(setup.psi_i, setup.b_f),
        setup.denominator_floor,
    )


def transition_ratio(
    setup: WeakMeasurementSetup, engine: Optional[PathIntegralEngine] = None
) -> WeakValue:
    """T_w / T for a contact coupling: paths through Q_w over all paths."""
    if setup.profile.kind != "contact":
        raise ValueError("transition_ratio requires a contact profile")
    engine = engine or PathIntegralEngine.from_setup(setup)
    weight = setup.profile.on_grid(setup.grid).values
    return WeakValue.from_ratio(
        engine.numerator(setup.psi_i, setup.b_f, weight),
        engine.denominator(setup.psi_i, setup.b_f),
        setup.denominator_floor,
    )


def scan_weak_values(
    setup: WeakMeasurementSetup,
    q_values: Iterable[float],
    engine: Optional[PathIntegralEngine] = None,
) -> pd.DataFrame:
    """Contact weak values for a range of coupling points Q_w."""
    engine = engine or PathIntegralEngine.from_setup(setup)
    grid = setup.grid
    chi = engine.postselection_row(setup.b_f)
    psi_w = engine.state_at_tw(setup.psi_i).amplitudes
    denominator = engine.denominator(setup.psi_i, setup.b_f)
    rows = []
    for q in q_values:
        idx = grid.index_of(q)
        numerator = complex(chi[idx] * setup.A.values[idx] * psi_w[idx])
        wv = WeakValue.from_ratio(numerator, denominator, setup.denominator_floor)
        rows.append({
            "Q_w": grid.points[idx],
            "re": wv.value.real,
            "im": wv.value.imag,
            "numerator_re": numerator.real,
            "numerator_im": numerator.imag,
        })
    return pd.DataFrame(rows)


def position_filter(grid: Grid, x_f: float) -> WaveFunction:
    """Postselection on a single grid cell: amplitude 1/dx at x_f."""
    amps = np.zeros(grid.n_points, dtype=complex)
    amps[grid.index_of(x_f)] = 1.0 / grid.dx
    return WaveFunction(grid, amps)


def infer_propagator(
    psi_known: WaveFunction,
    psi_f_known: WaveFunction,
    wv: WeakValue,
    A_at_Qw: float,
    Q_w: float,
    x_f: float,
    floor: float = DENOMINATOR_FLOOR,
) -> complex:
    """
    Invert  A^w = A(Q_w) K(x_f, Q_w) psi(Q_w, t_w) / psi(x_f, t_f).

    Args:
        psi_known: State at t_w
        psi_f_known: State at t_f
        wv: Weak value measured with a position-filter postselection at x_f
        A_at_Qw: A(Q_w), nonzero
        Q_w: Coupling point
        x_f: Postselected position

    Returns:
        Inferred propagator K(x_f, t_f; Q_w, t_w)

    Raises:
        NodeAtCouplingPointError: If psi(Q_w, t_w) is below the floor
    """
    if A_at_Qw == 0:
        raise ValueError("A(Q_w) = 0 carries no information about the propagator")
    psi_at_q = psi_known.value_at(Q_w)
    if abs(psi_at_q) < floor:
        raise NodeAtCouplingPointError(
            f"node at coupling point: |psi(Q_w={Q_w}, t_w)| = {abs(psi_at_q):.2e}"
        )
    return complex(wv.value * psi_f_known.value_at(x_f) / (A_at_Qw * psi_at_q))


def infer_propagator_scan(
    engine: PathIntegralEngine,
    psi_i: WaveFunction,
    A: ConfigFunction,
    q_values: Iterable[float],
    xf_values: Iterable[float],
    workers: int = 1,
    floor: float = DENOMINATOR_FLOOR,
) -> pd.DataFrame:
    """Weak-value inference of K(x_f, Q_w) over a (Q_w, x_f) scan."""
    grid = engine.grid
    psi_w = engine.state_at_tw(psi_i)
    psi_f = engine.state_at_tf(psi_i)

    def infer_one(point):
        q, x_f = point
        b_f = position_filter(grid, x_f)
        weight = A.values * InteractionProfile(q).on_grid(grid).values
        wv = WeakValue.from_ratio(
            engine.numerator(psi_i, b_f, weight), engine.denominator(psi_i, b_f), floor
        )
        k_hat = infer_propagator(psi_w, psi_f, wv, A.values[grid.index_of(q)], q, x_f, floor)
        return {
            "Q_w": grid.points[grid.index_of(q)],
            "x_f": grid.points[grid.index_of(x_f)],
            "re": k_hat.real,
            "im": k_hat.imag,
        }

    points = [(q, x) for q in q_values for x in xf_values]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(infer_one, points))
    return pd.DataFrame(rows)
