"""
Discrete-mode nested Mach-Zehnder network and weak values of path projectors.

Beamsplitters are real rotations [[c, -s], [s, c]] on a mode pair, phases are
explicit stages. An interface k is the mode basis after the first k stages;
a site is a (interface, mode) pair with a physical label.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy.linalg import null_space

from .exceptions import DenominatorUnderflowError, WeakPathError

logger = logging.getLogger(__name__)

UNITARITY_TOL = 1e-12
ZERO_TOL = 1e-10
AMBIGUITY_BAND = 1e-8
DENOMINATOR_FLOOR = 1e-10

NESTED_MZ_SITES = {
    "A": (1, 0),
    "E": (1, 1),
    "B": (2, 1),
    "C": (2, 2),
    "F": (5, 1),
    "G": (5, 2),
    "D": (7, 0),
}


@dataclass(frozen=True)
class Stage:
    """A beamsplitter on a mode pair (value = angle) or a phase on one mode."""

    kind: str
    modes: Tuple[int, ...]
    value: float

    def __post_init__(self):
        if self.kind not in ("beamsplitter", "phase"):
            raise ValueError(f"unknown stage kind {self.kind!r}")
        expected = 2 if self.kind == "beamsplitter" else 1
        if len(self.modes) != expected:
            raise ValueError(f"{self.kind} stage acts on {expected} mode(s), got {self.modes}")
        if not np.isfinite(self.value):
            raise ValueError("stage angle/phase must be finite")

    def matrix(self, n_modes: int) -> np.ndarray:
        u = np.eye(n_modes, dtype=complex)
        if self.kind == "phase":
            u[self.modes[0], self.modes[0]] = np.exp(1j * self.value)
            return u
        a, b = self.modes
        c, s = np.cos(self.value), np.sin(self.value)
        u[a, a], u[a, b], u[b, a], u[b, b] = c, -s, s, c
        return u


@dataclass
class ModeNetwork:
    """Ordered unitary stages over n_modes with labelled sites."""

    n_modes: int
    stages: List[Stage]
    site_labels: Dict[str, Tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        self.stages = [s if isinstance(s, Stage) else Stage(s["kind"], tuple(s["modes"]), s["value"]) for s in self.stages]
        self.site_labels = {k: tuple(v) for k, v in self.site_labels.items()}
        for i, stage in enumerate(self.stages):
            if max(stage.modes) >= self.n_modes:
                raise ValueError(f"stage {i} addresses a mode outside 0..{self.n_modes - 1}")
            u = stage.matrix(self.n_modes)
            if np.max(np.abs(u.conj().T @ u - np.eye(self.n_modes))) > UNITARITY_TOL:
                raise ValueError(f"stage {i} is not unitary")
        for label, (interface, mode) in self.site_labels.items():
            if not 0 <= interface <= len(self.stages) or not 0 <= mode < self.n_modes:
                raise ValueError(f"site {label} refers to a missing interface or mode")

    def transfer(self, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        """Product of stages start..stop-1, later stages on the left."""
        stop = len(self.stages) if stop is None else stop
        u = np.eye(self.n_modes, dtype=complex)
        for stage in self.stages[start:stop]:
            u = stage.matrix(self.n_modes) @ u
        return u

    def total(self) -> np.ndarray:
        return self.transfer()

    def unitarity_defect(self) -> float:
        u = self.total()
        return float(np.max(np.abs(u.conj().T @ u - np.eye(self.n_modes))))

    def to_dict(self) -> Dict:
        return {
            "n_modes": self.n_modes,
            "stages": [asdict(s) for s in self.stages],
            "site_labels": {k: list(v) for k, v in self.site_labels.items()},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ModeNetwork":
        return cls(data["n_modes"], data["stages"], data.get("site_labels", {}))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ModeNetwork":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_nested_mz(
    theta1: float = np.pi / 4,
    theta2: float = np.pi / 4,
    theta3: float = np.pi / 4,
    theta4: float = np.pi / 4,
    phi_B: float = 0.0,
    phi_C: float = 0.0,
    phi_outer: float = 0.0,
) -> ModeNetwork:
    """
    Three-path interferometer: outer arm A, inner loop E -> {B, C} -> F.

    Mode 0 carries A and ends at detector D. The first beamsplitter feeds
    E (mode 1), the inner pair splits E into B and C (modes 1, 2) and
    recombines them into F and G, and the last beamsplitter mixes A with F.
    """
    stages = [
        Stage("beamsplitter", (0, 1), theta1),
        Stage("beamsplitter", (1, 2), theta2),
        Stage("phase", (1,), phi_B),
        Stage("phase", (2,), phi_C),
        Stage("beamsplitter", (1, 2), theta3),
        Stage("phase", (0,), phi_outer),
        Stage("beamsplitter", (0, 1), theta4),
    ]
    return ModeNetwork(3, stages, dict(NESTED_MZ_SITES))


@dataclass(frozen=True)
class SiteWeakValue:
    """Weak value of the projector on one site with the amplitudes behind it."""

    site: str
    value: complex
    wavefunction_amp: complex
    backward_amp: complex
    partial_overlap: complex
    total_overlap: complex


def _mode_vector(vec, n_modes: int) -> np.ndarray:
    arr = np.asarray(vec, dtype=complex)
    if arr.shape != (n_modes,):
        raise ValueError(f"mode vector must have {n_modes} entries")
    return arr


def projector_weak_value(
    net: ModeNetwork, site: str, psi_i, b_f, floor: float = DENOMINATOR_FLOOR
) -> SiteWeakValue:
    """
    <b_f| U_after Pi_site U_before |psi_i> / <b_f| U_total |psi_i>.

    Raises:
        KeyError: Unknown site label
        DenominatorUnderflowError: If the total overlap is below the floor
    """
    interface, mode = net.site_labels[site]
    psi_i, b_f = _mode_vector(psi_i, net.n_modes), _mode_vector(b_f, net.n_modes)
    forward = net.transfer(0, interface) @ psi_i
    backward = net.transfer(interface).conj().T @ b_f
    total = complex(np.vdot(b_f, net.total() @ psi_i))
    if not abs(total) > floor:
        raise DenominatorUnderflowError(complex(np.conj(backward[mode]) * forward[mode]), total, floor)
    partial = complex(np.conj(backward[mode]) * forward[mode])
    return SiteWeakValue(site, partial / total, complex(forward[mode]), complex(backward[mode]), partial, total)


def cut_weak_values(net: ModeNetwork, interface: int, psi_i, b_f) -> np.ndarray:
    """Projector weak values of every mode at one interface; they sum to 1."""
    psi_i, b_f = _mode_vector(psi_i, net.n_modes), _mode_vector(b_f, net.n_modes)
    forward = net.transfer(0, interface) @ psi_i
    backward = net.transfer(interface).conj().T @ b_f
    total = np.vdot(b_f, net.total() @ psi_i)
    if not abs(total) > DENOMINATOR_FLOOR:
        raise DenominatorUnderflowError(0j, complex(total), DENOMINATOR_FLOOR)
    return backward.conj() * forward / total


class VanishingCase(str, Enum):
    CLASSICAL_ABSENCE = "ClassicalAbsence"
    DESTRUCTIVE_INTERFERENCE = "DestructiveInterference"
    POSTSELECTION_ORTHOGONALITY = "PostselectionOrthogonality"
    NON_VANISHING = "NonVanishing"


@dataclass(frozen=True)
class Classification:
    case: VanishingCase
    ambiguous: bool = False


def classify_vanishing(
    swv: SiteWeakValue,
    A_at_site: float,
    zero_tol: float = ZERO_TOL,
    band: float = AMBIGUITY_BAND,
) -> Classification:
    """
    Why a site weak value vanishes, if it does.

    ClassicalAbsence: A is zero at the site. DestructiveInterference: the
    preselected wave has no amplitude there. PostselectionOrthogonality: the
    wave is there but the paths through the site end orthogonal to the
    postselection. A criterion sitting between zero_tol and band marks the
    result ambiguous.
    """
    if A_at_site == 0:
        return Classification(VanishingCase.CLASSICAL_ABSENCE)
    amp = abs(swv.wavefunction_amp)
    overlap = abs(swv.partial_overlap)
    ambiguous = any(zero_tol <= x < band for x in (amp, overlap, abs(A_at_site)))
    if amp < zero_tol:
        case = VanishingCase.DESTRUCTIVE_INTERFERENCE
    elif overlap < zero_tol:
        case = VanishingCase.POSTSELECTION_ORTHOGONALITY
    else:
        case = VanishingCase.NON_VANISHING
    if ambiguous:
        logger.debug("site %s classification %s is within the ambiguity band", swv.site, case.value)
    return Classification(case, ambiguous)


def _site_column(net: ModeNetwork, site: str) -> np.ndarray:
    interface, mode = net.site_labels[site]
    return net.transfer(interface)[:, mode]


def design_postselection(
    net: ModeNetwork,
    psi_i,
    dark_sites: Iterable[str],
    theta: float = np.pi / 4,
) -> np.ndarray:
    """
    Postselected mode vector with zero backward amplitude at every dark site.

    Admissible vectors form the null space of the dark-site columns of the
    downstream transfer matrices. The result is cos(theta) times the
    normalized projection of U psi_i onto that space plus sin(theta) times a
    unit admissible vector orthogonal to it (when the space has one).

    Raises:
        WeakPathError: If U psi_i has no admissible component
    """
    psi_i = _mode_vector(psi_i, net.n_modes)
    columns = np.array([_site_column(net, s).conj() for s in dark_sites])
    basis = null_space(columns) if len(columns) else np.eye(net.n_modes, dtype=complex)
    evolved = net.total() @ psi_i
    projected = basis @ (basis.conj().T @ evolved)
    if np.linalg.norm(projected) < ZERO_TOL:
        raise WeakPathError("the dark-site constraints leave no overlap with the evolved preselection")
    direction = projected / np.linalg.norm(projected)

    complement = basis - np.outer(direction, direction.conj() @ basis)
    norms = np.linalg.norm(complement, axis=0)
    if norms.max() < ZERO_TOL:
        logger.debug("admissible space is one-dimensional; theta ignored")
        return direction
    other = complement[:, int(np.argmax(norms))]
    other = other / np.linalg.norm(other)
    pivot = other[int(np.argmax(np.abs(other)))]
    other = other * np.conj(pivot) / abs(pivot)
    b_f = np.cos(theta) * direction + np.sin(theta) * other
    return b_f / np.linalg.norm(b_f)


def scan_postselection(
    net: ModeNetwork,
    psi_i,
    dark_sites: Iterable[str],
    bright_sites: Iterable[str],
    n_angles: int = 181,
) -> Tuple[float, np.ndarray, float]:
    """
    Scan theta of design_postselection for the largest smallest |Pi^w| over
    the bright sites.

    Returns:
        (theta, b_f, score)
    """
    dark_sites, bright_sites = list(dark_sites), list(bright_sites)
    best = (0.0, None, -1.0)
    for theta in np.linspace(0.0, np.pi / 2, n_angles)[:-1]:
        b_f = design_postselection(net, psi_i, dark_sites, theta)
        try:
            score = min(abs(projector_weak_value(net, s, psi_i, b_f).value) for s in bright_sites)
        except DenominatorUnderflowError:
            continue
        if score > best[2] + 1e-12:
            best = (float(theta), b_f, float(score))
    if best[1] is None:
        raise WeakPathError("no admissible postselection in the scan")
    return best


def weak_trace(
    net: ModeNetwork, psi_i, b_f, A_values: Optional[Dict[str, float]] = None
) -> Dict[str, Dict]:
    """Weak value and vanishing classification of every labelled site."""
    report = {}
    for site in net.site_labels:
        swv = projector_weak_value(net, site, psi_i, b_f)
        a = 1.0 if A_values is None else A_values.get(site, 1.0)
        label = classify_vanishing(swv, a)
        report[site] = {
            "Re": swv.value.real,
            "Im": swv.value.imag,
            "wavefunction_amp": abs(swv.wavefunction_amp),
            "classification": label.case.value,
            "ambiguous": label.ambiguous,
        }
    return report
