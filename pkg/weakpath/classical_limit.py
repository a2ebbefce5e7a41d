"""
Classical counterpart of the weak measurement: a weighted phase-space ensemble
is transported by Hamilton's equations, postselected on where it lands, and
the probe kick g A(q) f(q, Q_w) is averaged over the accepted samples.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Union

import numpy as np
import pandas as pd

from .core import ConfigFunction, PhysicalParams, WaveFunction
from .exceptions import PostselectionError
from .integrators import integrate
from .potentials import Potential
from .propagators import step_count
from .weak_values import InteractionProfile

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12
ACCEPTANCE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class ClassicalEnsemble:
    """Weighted phase-space samples at time time_tag; weights sum to one."""

    q: np.ndarray
    p: np.ndarray
    w: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        q, p, w = (np.array(a, dtype=float, copy=True) for a in (self.q, self.p, self.w))
        if not q.shape == p.shape == w.shape or q.ndim != 1:
            raise ValueError("q, p and w must be one-dimensional arrays of equal length")
        if np.any(w < 0):
            raise ValueError("ensemble weights must be non-negative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"ensemble weights sum to {w.sum():.15f}, not 1")
        for name, arr in (("q", q), ("p", p), ("w", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_samples(cls, q, p, time_tag: float = 0.0) -> "ClassicalEnsemble":
        q = np.asarray(q, dtype=float)
        return cls(q, p, np.full(q.shape, 1.0 / q.size), time_tag)

    @classmethod
    def from_gaussian(
        cls,
        x0: float,
        p0: float,
        sigma: float,
        n: int,
        seed: Optional[int] = None,
        params: Optional[PhysicalParams] = None,
    ) -> "ClassicalEnsemble":
        """Sample the Wigner density of a minimum-uncertainty Gaussian."""
        hbar = (params or PhysicalParams()).hbar
        rng = np.random.default_rng(seed)
        q = rng.normal(x0, sigma, n)
        p = rng.normal(p0, hbar / (2 * sigma), n)
        return cls.from_samples(q, p)

    def __len__(self) -> int:
        return self.q.size

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"q": self.q, "p": self.p, "w": self.w})

    @classmethod
    def from_frame(cls, df: pd.DataFrame, time_tag: float = 0.0) -> "ClassicalEnsemble":
        return cls(df["q"].to_numpy(), df["p"].to_numpy(), df["w"].to_numpy(), time_tag)


def liouville_evolve(
    ens: ClassicalEnsemble,
    potential: Potential,
    duration: float,
    params: Optional[PhysicalParams] = None,
    dt: float = 0.01,
    scheme: str = "forest_ruth",
) -> ClassicalEnsemble:
    """Advance every sample along its Hamiltonian flow; weights are carried."""
    if duration == 0:
        return ens
    flow = integrate(ens.q, ens.p, duration, step_count(duration, dt), potential, params, scheme=scheme)
    return ClassicalEnsemble(flow.q, flow.p, ens.w, ens.time_tag + duration)


def classical_probe_kick(
    q,
    A: ConfigFunction,
    profile: InteractionProfile,
    g: float,
    cell_width: Optional[float] = None,
) -> np.ndarray:
    """
    Probe displacement g A(q) f(q, Q_w) of a heavy probe.

    A contact profile is a cell of height 1 / cell_width around Q_w; the
    cell defaults to the grid spacing of A.
    """
    cell = A.grid.dx if cell_width is None else cell_width
    return g * A.interpolate(np.asarray(q, dtype=float)) * profile.evaluate(q, cell)


def unconditioned_average_kick(
    ens: ClassicalEnsemble, A: ConfigFunction, profile: InteractionProfile, g: float
) -> float:
    return float(np.sum(ens.w * classical_probe_kick(ens.q, A, profile, g)))


@dataclass(frozen=True)
class PostselectionDomain:
    """Accept a sample when low <= b(q(t_f)) <= high."""

    b: Callable[[np.ndarray], np.ndarray]
    low: float = -np.inf
    high: float = np.inf
    label: str = "b"

    @classmethod
    def everything(cls) -> "PostselectionDomain":
        return cls(lambda q: np.zeros_like(q), label="all")

    @classmethod
    def half_space(cls, threshold: float = 0.0, above: bool = True) -> "PostselectionDomain":
        if above:
            return cls(lambda q: q, low=threshold, label=f"q > {threshold}")
        return cls(lambda q: q, high=threshold, label=f"q < {threshold}")

    @classmethod
    def interval(cls, low: float, high: float) -> "PostselectionDomain":
        return cls(lambda q: q, low=low, high=high, label=f"{low} <= q <= {high}")

    def accepts(self, q) -> np.ndarray:
        values = np.asarray(self.b(np.asarray(q, dtype=float)))
        return (values >= self.low) & (values <= self.high)


@dataclass
class ShiftReport:
    shift: float
    standard_error: float
    acceptance_fraction: float
    n_accepted: int

    def to_dict(self) -> Dict:
        return {
            "shift": self.shift,
            "standard_error": self.standard_error,
            "acceptance_fraction": self.acceptance_fraction,
            "n_accepted": self.n_accepted,
        }


def conditional_pointer_shift(
    ens_at_tw: ClassicalEnsemble,
    A: ConfigFunction,
    profile: InteractionProfile,
    g: float,
    domain: PostselectionDomain,
    potential: Potential,
    duration: float,
    params: Optional[PhysicalParams] = None,
    dt: float = 0.01,
    floor: float = ACCEPTANCE_FLOOR,
) -> ShiftReport:
    """
    Average kick over the samples whose transported position is accepted.

    The accepted set at t_w is found by carrying each sample forward to
    t_f and testing it there.

    Raises:
        PostselectionError: If the accepted weight is below the floor
    """
    kicks = classical_probe_kick(ens_at_tw.q, A, profile, g)
    final = liouville_evolve(ens_at_tw, potential, duration, params, dt)
    accepted = domain.accepts(final.q)
    weights = np.where(accepted, ens_at_tw.w, 0.0)
    fraction = float(weights.sum())
    if fraction <= floor:
        raise PostselectionError(
            f"postselection on {domain.label} accepted weight {fraction:.2e}", fraction
        )
    shift = float(np.sum(weights * kicks) / fraction)
    variance = float(np.sum(weights**2 * (kicks - shift) ** 2) / fraction**2)
    logger.debug("classical shift %.6g, acceptance %.4f", shift, fraction)
    return ShiftReport(shift, float(np.sqrt(variance)), fraction, int(accepted.sum()))


def coherence_decay(psi: WaveFunction, scale: float) -> float:
    """
    Off-diagonal mass of rho(x', x) after averaging over boxes of size scale.

    With a_I the box mean of psi and p_I the box mean of |psi|^2, returns
    sum_{I != J} |a_I|^2 |a_J|^2 / (sum_I p_I)^2.
    """
    per_box = int(round(scale / psi.grid.dx))
    if per_box < 1:
        raise ValueError("coarse-graining scale is below the grid spacing")
    n_boxes = psi.grid.n_points // per_box
    amps = psi.amplitudes[: n_boxes * per_box].reshape(n_boxes, per_box)
    a2 = np.abs(amps.mean(axis=1)) ** 2
    density = (np.abs(amps) ** 2).mean(axis=1)
    return float((a2.sum() ** 2 - np.sum(a2**2)) / density.sum() ** 2)
