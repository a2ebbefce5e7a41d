"""
Classical boundary-value paths and the semiclassical propagator built on them.

Every kernel term is  A_k exp(i[S_k / hbar - pi mu_k / 2])  with the Van
Vleck amplitude A_k = e^{-i pi/4} (2 pi hbar |dx_f/dp_i|)^{-1/2} and the
Maslov index mu_k counted as sign changes of dx(t)/dp_i along the path.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .core import PhysicalParams
from .exceptions import CausticError, WeakPathError
from .integrators import integrate
from .potentials import Potential
from .weak_values import WeakMeasurementSetup, WeakValue

logger = logging.getLogger(__name__)

CAUSTIC_TOL = 1e-9
BVP_TOL = 1e-9
SUPPORT_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class ClassicalTrajectory:
    """A solved path with its action, monodromy element and Maslov index."""

    x_i: float
    x_f: float
    t_i: float
    t_f: float
    p_i: float
    p_f: float
    action: float
    dq_dp0: float
    maslov: int
    times: Optional[np.ndarray] = None
    q_samples: Optional[np.ndarray] = None
    p_samples: Optional[np.ndarray] = None
    dq_dq0: float = np.nan
    dp_dp0: float = np.nan

    @property
    def duration(self) -> float:
        return self.t_f - self.t_i

    @property
    def initial_curvature(self) -> float:
        """d^2 S / d x_i^2 at fixed x_f."""
        return self.dq_dq0 / self.dq_dp0

    @property
    def final_curvature(self) -> float:
        """d^2 S / d x_f^2 at fixed x_i."""
        return self.dp_dp0 / self.dq_dp0

    def energies(self, potential: Potential, params: Optional[PhysicalParams] = None) -> np.ndarray:
        if self.q_samples is None:
            raise ValueError("trajectory was solved without recorded samples")
        m = (params or PhysicalParams()).m
        return self.p_samples**2 / (2 * m) + potential.value(self.q_samples)

    def to_frame(self) -> pd.DataFrame:
        if self.q_samples is None:
            raise ValueError("trajectory was solved without recorded samples")
        return pd.DataFrame({"t": self.t_i + self.times, "q": self.q_samples, "p": self.p_samples})


class ShootingSolver:
    """
    Shooting on the initial momentum, vectorized over endpoint pairs and seeds.

    Seeds span m (x_f - x_i) / duration +/- half_width unless explicit seeds
    are given. Adjacent seeds whose end-point residuals change sign bracket a
    root, which a safeguarded Newton iteration on dx_f/dp_i polishes.
    """

    def __init__(
        self,
        potential: Potential,
        params: Optional[PhysicalParams] = None,
        n_seeds: int = 64,
        half_width: float = 20.0,
        n_steps: int = 2000,
        scheme: str = "forest_ruth",
        bvp_tol: float = BVP_TOL,
        dedup_tol: float = 1e-6,
        max_iterations: int = 60,
    ):
        if n_seeds < 2:
            raise ValueError("need at least two seeds to bracket a root")
        self.potential = potential
        self.params = params or PhysicalParams()
        self.n_seeds = n_seeds
        self.half_width = half_width
        self.n_steps = n_steps
        self.scheme = scheme
        self.bvp_tol = bvp_tol
        self.dedup_tol = dedup_tol
        self.max_iterations = max_iterations

    def _flow(self, q0, p0, duration, record=False):
        return integrate(
            q0, p0, duration, self.n_steps, self.potential, self.params,
            scheme=self.scheme, tangent=True, record=record,
        )

    def trajectory(self, x_i: float, p_i: float, duration: float, t_i: float = 0.0) -> ClassicalTrajectory:
        """Initial-value trajectory with recorded samples."""
        flow = self._flow(np.array([x_i]), np.array([p_i]), duration, record=True)
        return ClassicalTrajectory(
            x_i, float(flow.q[0]), t_i, t_i + duration, p_i, float(flow.p[0]),
            float(flow.action[0]), float(flow.dq_dp0[0]), int(flow.conjugate_points[0]),
            flow.times, flow.q_samples[:, 0], flow.p_samples[:, 0],
            dq_dq0=float(flow.dq_dq0[0]), dp_dp0=float(flow.dp_dp0[0]),
        )

    def _polish(self, x_i, x_f, lo, hi, r_lo, duration):
        p = 0.5 * (lo + hi)
        done = np.zeros(p.shape, dtype=bool)
        for _ in range(self.max_iterations):
            flow = self._flow(x_i, p, duration)
            r = flow.q - x_f
            done = np.abs(r) < self.bvp_tol
            if done.all():
                break
            same_side = np.sign(r) == np.sign(r_lo)
            lo = np.where(same_side & ~done, p, lo)
            hi = np.where(~same_side & ~done, p, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = p - r / flow.dq_dp0
            inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
            p = np.where(done, p, np.where(inside, newton, 0.5 * (lo + hi)))
        if not done.all():
            logger.debug("%d bracketed roots did not converge", int((~done).sum()))
        return np.where(done, p, np.nan)

    def solve_many(
        self,
        x_i,
        x_f,
        duration: float,
        seeds: Optional[Sequence[float]] = None,
        t_i: float = 0.0,
        record: bool = False,
    ) -> List[List[ClassicalTrajectory]]:
        """
        Solve q(t_i) = x_i, q(t_i + duration) = x_f for every pair.

        Returns:
            One list of trajectories per pair, ordered by initial momentum;
            an empty list where no seed led to a root.
        """
        if duration <= 0:
            raise ValueError("duration must be positive")
        x_i, x_f = np.broadcast_arrays(np.atleast_1d(np.asarray(x_i, float)), np.atleast_1d(np.asarray(x_f, float)))
        n_pairs = x_i.size
        x_i, x_f = x_i.ravel(), x_f.ravel()
        if seeds is not None:
            grid = np.sort(np.asarray(seeds, dtype=float))
            if grid.size < 2:
                raise ValueError("need at least two seeds to bracket a root")
            seed_grid = np.broadcast_to(grid, (n_pairs, grid.size))
        else:
            center = self.params.m * (x_f - x_i) / duration
            offsets = np.linspace(-self.half_width, self.half_width, self.n_seeds)
            seed_grid = center[:, None] + offsets[None, :]
        n_seeds = seed_grid.shape[1]

        scan = self._flow(np.repeat(x_i[:, None], n_seeds, axis=1), seed_grid, duration)
        residual = scan.q - x_f[:, None]

        pair_exact, seed_exact = np.nonzero(residual == 0)
        pair_idx, seed_idx = np.nonzero(residual[:, :-1] * residual[:, 1:] < 0)
        polished = self._polish(
            x_i[pair_idx], x_f[pair_idx],
            seed_grid[pair_idx, seed_idx], seed_grid[pair_idx, seed_idx + 1],
            residual[pair_idx, seed_idx], duration,
        )
        root_pairs = np.concatenate([pair_exact, pair_idx])
        root_p = np.concatenate([seed_grid[pair_exact, seed_exact], polished])
        keep = np.isfinite(root_p)
        root_pairs, root_p = root_pairs[keep], root_p[keep]

        results: List[List[ClassicalTrajectory]] = [[] for _ in range(n_pairs)]
        if root_p.size == 0:
            logger.debug("no classical path found for any of %d endpoint pairs", n_pairs)
            return results
        flow = self._flow(x_i[root_pairs], root_p, duration, record=record)
        order = np.lexsort((root_p, root_pairs))
        for k in order:
            pair = int(root_pairs[k])
            if results[pair] and abs(root_p[k] - results[pair][-1].p_i) <= self.dedup_tol:
                continue
            results[pair].append(ClassicalTrajectory(
                float(x_i[pair]), float(flow.q[k]), t_i, t_i + duration,
                float(root_p[k]), float(flow.p[k]), float(flow.action[k]),
                float(flow.dq_dp0[k]), int(flow.conjugate_points[k]),
                flow.times if record else None,
                flow.q_samples[:, k] if record else None,
                flow.p_samples[:, k] if record else None,
                dq_dq0=float(flow.dq_dq0[k]),
                dp_dp0=float(flow.dp_dp0[k]),
            ))
        empty = sum(1 for paths in results if not paths)
        if empty:
            logger.debug("%d of %d endpoint pairs have no classical path", empty, n_pairs)
        return results

    def solve(self, x_i: float, x_f: float, duration: float, **kwargs) -> List[ClassicalTrajectory]:
        return self.solve_many([x_i], [x_f], duration, **kwargs)[0]


def solve_bvp(
    x_i: float,
    x_f: float,
    t_i: float,
    t_f: float,
    potential: Potential,
    params: Optional[PhysicalParams] = None,
    p0_seeds: Optional[Sequence[float]] = None,
    **solver_options,
) -> List[ClassicalTrajectory]:
    """All classical paths from (x_i, t_i) to (x_f, t_f) found from the seeds."""
    solver = ShootingSolver(potential, params, **solver_options)
    return solver.solve_many([x_i], [x_f], t_f - t_i, seeds=p0_seeds, t_i=t_i, record=True)[0]


def vanvleck_amplitude(
    traj: ClassicalTrajectory, params: Optional[PhysicalParams] = None, caustic_tol: float = CAUSTIC_TOL
) -> complex:
    """
    e^{-i pi/4} (2 pi hbar |dx_f/dp_i|)^{-1/2}.

    Raises:
        CausticError: If |dx_f/dp_i| is below caustic_tol
    """
    hbar = (params or PhysicalParams()).hbar
    if abs(traj.dq_dp0) < caustic_tol:
        raise CausticError(
            f"trajectory ends at a caustic: |dx_f/dp_i| = {abs(traj.dq_dp0):.2e}",
            conjugate_time=traj.t_f,
        )
    return np.exp(-0.25j * np.pi) / np.sqrt(2 * np.pi * hbar * abs(traj.dq_dp0))


def kernel_term(traj: ClassicalTrajectory, params: Optional[PhysicalParams] = None) -> complex:
    hbar = (params or PhysicalParams()).hbar
    phase = traj.action / hbar - 0.5 * np.pi * traj.maslov
    return complex(vanvleck_amplitude(traj, params) * np.exp(1j * phase))


def semiclassical_kernel(
    x_f: float,
    x_i: float,
    duration: float,
    potential: Potential,
    params: Optional[PhysicalParams] = None,
    solver: Optional[ShootingSolver] = None,
) -> complex:
    """Sum over classical paths of A_k exp(i[S_k/hbar - pi mu_k/2])."""
    solver = solver or ShootingSolver(potential, params)
    paths = solver.solve(x_i, x_f, duration)
    if not paths:
        raise WeakPathError(f"no classical path from {x_i} to {x_f} in time {duration}")
    return sum(kernel_term(path, solver.params) for path in paths)


def semiclassical_kernel_table(
    xf_values, xi_values, duration: float, solver: ShootingSolver
) -> np.ndarray:
    """K_sc(x_f, x_i) on the product of the two point sets, rows over x_f."""
    xf_values, xi_values = np.asarray(xf_values, float), np.asarray(xi_values, float)
    xf_mesh, xi_mesh = np.meshgrid(xf_values, xi_values, indexing="ij")
    solutions = solver.solve_many(xi_mesh.ravel(), xf_mesh.ravel(), duration)
    table = np.empty(len(solutions), dtype=complex)
    for k, paths in enumerate(solutions):
        if not paths:
            raise WeakPathError(
                f"no classical path from {xi_mesh.ravel()[k]} to {xf_mesh.ravel()[k]} in time {duration}"
            )
        table[k] = sum(kernel_term(path, solver.params) for path in paths)
    return table.reshape(xf_mesh.shape)


def weak_value_semiclassical(
    setup: WeakMeasurementSetup, solver: Optional[ShootingSolver] = None
) -> WeakValue:
    """
    Contact weak value with every propagator replaced by its path sum.

    Paths through Q_w (x_i -> Q_w -> x_f) form the numerator, direct paths
    x_i -> x_f the denominator. End points run over the grid points where
    psi_i or b_f is non-negligible, with the grid quadrature of the
    path-integral engine.
    """
    if setup.profile.kind != "contact":
        raise ValueError("semiclassical weak value requires a contact profile")
    solver = solver or ShootingSolver(setup.potential, setup.params)
    grid = setup.grid
    dx = grid.dx
    iq = grid.index_of(setup.profile.Q_w)
    q = grid.points[iq]

    psi = setup.psi_i.amplitudes
    b = setup.b_f.amplitudes
    initial = np.abs(psi) > SUPPORT_CUTOFF * np.abs(psi).max()
    final = np.abs(b) > SUPPORT_CUTOFF * np.abs(b).max()
    xi, xf = grid.points[initial], grid.points[final]
    psi_s, b_s = psi[initial], b[final].conj()

    k_before = semiclassical_kernel_table([q], xi, setup.t_w - setup.t_i, solver)[0]
    k_after = semiclassical_kernel_table(xf, [q], setup.t_f - setup.t_w, solver)[:, 0]
    k_direct = semiclassical_kernel_table(xf, xi, setup.t_f - setup.t_i, solver)

    numerator = (b_s @ k_after * dx) * setup.A.values[iq] * (k_before @ psi_s * dx)
    denominator = b_s @ k_direct @ psi_s * dx * dx
    return WeakValue.from_ratio(numerator, denominator, setup.denominator_floor)


@dataclass(frozen=True)
class PeriodicOrbitSpec:
    """
    A closed orbit through x0, probed at x_p after t_w.

    amp_out and amp_back carry the Maslov phase of their leg, so the
    semiclassical weight of the orbit is amp_out * amp_back * exp(i S_po/hbar).
    p_out is the launch momentum of the outgoing leg and p_back the arrival
    momentum of the return leg; the curvatures are d^2 S / dx^2 at x0 on
    each leg.
    """

    x0: float
    x_p: float
    t_w: float
    period: float
    S_po: float
    amp_out: complex
    amp_back: complex
    p_out: float = 0.0
    p_back: float = 0.0
    curvature_out: float = 0.0
    curvature_back: float = 0.0

    def weight(self, hbar: float = 1.0) -> complex:
        return self.amp_out * self.amp_back * np.exp(1j * self.S_po / hbar)

    def packet_overlap(self, sigma: float, hbar: float = 1.0, p0: float = 0.0) -> complex:
        """
        Gaussian integral of a packet of width sigma and momentum p0 against
        both legs, expanded to second order about x0.

        Each leg contributes sqrt(pi/alpha) exp(-(p - p0)^2 / (4 hbar^2 alpha))
        with alpha = 1/(4 sigma^2) - i S''/(2 hbar).
        """
        if not sigma > 0:
            raise ValueError("packet width sigma must be > 0")
        factor = 1.0 + 0.0j
        for p, curvature in ((self.p_out, self.curvature_out), (self.p_back, self.curvature_back)):
            alpha = 1.0 / (4 * sigma**2) - 0.5j * curvature / hbar
            factor *= np.sqrt(np.pi / alpha) * np.exp(-((p - p0) ** 2) / (4 * hbar**2 * alpha))
        return complex(factor)


def _phased_amplitude(traj: ClassicalTrajectory, params: PhysicalParams) -> complex:
    return complex(vanvleck_amplitude(traj, params) * np.exp(-0.5j * np.pi * traj.maslov))


def periodic_orbit_spec(
    x0: float,
    x_p: float,
    t_w: float,
    period: float,
    potential: Potential,
    params: Optional[PhysicalParams] = None,
    p0: float = 0.0,
    solver: Optional[ShootingSolver] = None,
    closure_tol: float = 1e-7,
) -> PeriodicOrbitSpec:
    """
    Orbit data for scar reconstruction: x0 -> x_p in t_w, then back to x0.

    The outgoing leg closest to initial momentum p0 is taken; the return
    leg is the one that continues it.

    Raises:
        WeakPathError: If a leg has no classical path or the orbit does not close
    """
    params = params or PhysicalParams()
    if not 0 < t_w < period:
        raise ValueError("need 0 < t_w < period")
    solver = solver or ShootingSolver(potential, params)
    outgoing = solver.solve(x0, x_p, t_w)
    returning = solver.solve(x_p, x0, period - t_w)
    if not outgoing or not returning:
        raise WeakPathError("no classical path on one leg of the orbit")
    out = min(outgoing, key=lambda path: abs(path.p_i - p0))
    back = min(returning, key=lambda path: abs(path.p_i - out.p_f))

    closure = solver.trajectory(x0, out.p_i, period)
    if abs(closure.x_f - x0) > closure_tol or abs(closure.p_f - out.p_i) > closure_tol:
        raise WeakPathError(
            f"orbit does not close: end point ({closure.x_f:.6g}, {closure.p_f:.6g})"
        )
    return PeriodicOrbitSpec(
        x0, x_p, t_w, period, out.action + back.action,
        _phased_amplitude(out, params), _phased_amplitude(back, params),
        p_out=out.p_i, p_back=back.p_f,
        curvature_out=out.initial_curvature, curvature_back=back.final_curvature,
    )


def _require_nonzero(**factors) -> None:
    for name, value in factors.items():
        if not np.isfinite(value) or value == 0:
            raise ValueError(f"scar reconstruction factor {name} vanishes or is not finite")


def scar_autocorrelation(
    wv: WeakValue,
    po: PeriodicOrbitSpec,
    A_at_xp: float,
    G0_at_x0: complex,
    sigma: float,
    hbar: float = 1.0,
    p0: float = 0.0,
) -> complex:
    """
    <G(0)|G(t_f)> from the contact weak value at x_p and one periodic orbit.

    Returns  A(x_p) weight |G(x0, 0)|^2 overlap / A^w, where weight is
    amp_out amp_back exp(i S_po/hbar) and overlap is the Gaussian packet
    factor of both legs (po.packet_overlap).
    """
    _require_nonzero(A_at_xp=A_at_xp, G0_at_x0=abs(G0_at_x0), weak_value=abs(wv.value),
                     amp_out=abs(po.amp_out), amp_back=abs(po.amp_back))
    orbit_term = po.weight(hbar) * po.packet_overlap(sigma, hbar, p0)
    return complex(orbit_term * A_at_xp * abs(G0_at_x0) ** 2 / wv.value)


def predict_scar_weak_value(
    autocorrelation: complex,
    po: PeriodicOrbitSpec,
    A_at_xp: float,
    G0_at_x0: complex,
    sigma: float,
    hbar: float = 1.0,
    p0: float = 0.0,
) -> complex:
    """Inverse of scar_autocorrelation: the weak value a given autocorrelation implies."""
    _require_nonzero(A_at_xp=A_at_xp, G0_at_x0=abs(G0_at_x0), autocorrelation=abs(autocorrelation))
    orbit_term = po.weight(hbar) * po.packet_overlap(sigma, hbar, p0)
    return complex(orbit_term * A_at_xp * abs(G0_at_x0) ** 2 / autocorrelation)
