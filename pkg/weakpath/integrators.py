"""
Symplectic splitting integrators for H = p^2/2m + V(q).

Drift and kick sub-steps are exact flows, so the action is accumulated
exactly per sub-step (drift: +p^2/2m h, kick: -V h). The tangent maps
d(q, p)/d p_initial and d(q, p)/d q_initial are exact derivatives of the
discrete map. All state arrays may have any shape; every lane is
integrated independently.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import PhysicalParams
from .exceptions import IntegratorError
from .potentials import Potential

MAX_FORCE = 1e12

_THETA = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))

# (drift coefficients, kick coefficients), drift first and last
SCHEMES = {
    "verlet": ((0.5, 0.5), (1.0,)),
    "forest_ruth": (
        (_THETA / 2, (1 - _THETA) / 2, (1 - _THETA) / 2, _THETA / 2),
        (_THETA, 1 - 2 * _THETA, _THETA),
    ),
}


@dataclass
class FlowResult:
    """End state of an integration, optionally with the full time series."""

    q: np.ndarray
    p: np.ndarray
    action: np.ndarray
    dq_dp0: np.ndarray
    dp_dp0: np.ndarray
    conjugate_points: np.ndarray
    dq_dq0: Optional[np.ndarray] = None
    dp_dq0: Optional[np.ndarray] = None
    times: Optional[np.ndarray] = None
    q_samples: Optional[np.ndarray] = None
    p_samples: Optional[np.ndarray] = None


def _force(potential: Potential, q: np.ndarray) -> np.ndarray:
    force = -potential.gradient(q)
    if not np.all(np.isfinite(force)) or np.any(np.abs(force) > MAX_FORCE):
        raise IntegratorError("force blow-up during integration; reduce the step or the time span")
    return force


def integrate(
    q0,
    p0,
    duration: float,
    n_steps: int,
    potential: Potential,
    params: Optional[PhysicalParams] = None,
    scheme: str = "forest_ruth",
    tangent: bool = False,
    record: bool = False,
) -> FlowResult:
    """
    Integrate Hamilton's equations with a fixed-step splitting scheme.

    Args:
        q0: Initial positions (any shape)
        p0: Initial momenta (same shape as q0)
        duration: Total time, > 0
        n_steps: Number of full steps
        potential: Potential with analytic gradient/curvature
        params: Masses
        scheme: "verlet" or "forest_ruth"
        tangent: Propagate d(q,p)/dp0 and d(q,p)/dq0, and count conjugate points
        record: Keep (t, q, p) after every full step

    Returns:
        FlowResult at t = duration
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    m = (params or PhysicalParams()).m
    drifts, kicks = SCHEMES[scheme]
    h = duration / n_steps

    q = np.array(q0, dtype=float, copy=True)
    p = np.broadcast_to(np.array(p0, dtype=float), q.shape).copy()
    action = np.zeros_like(q)
    dq = np.zeros_like(q)
    dp = np.ones_like(q)
    dq2 = np.ones_like(q)
    dp2 = np.zeros_like(q)
    crossings = np.zeros(q.shape, dtype=int)
    last_sign = np.ones(q.shape)

    if record:
        times = np.linspace(0.0, duration, n_steps + 1)
        q_samples = np.empty((n_steps + 1,) + q.shape)
        p_samples = np.empty((n_steps + 1,) + q.shape)
        q_samples[0], p_samples[0] = q, p

    for step in range(n_steps):
        for i, c in enumerate(drifts):
            q += c * h * p / m
            action += c * h * p**2 / (2 * m)
            if tangent:
                dq += c * h * dp / m
                dq2 += c * h * dp2 / m
            if i < len(kicks):
                d = kicks[i]
                action -= d * h * potential.value(q)
                p += d * h * _force(potential, q)
                if tangent:
                    curvature = potential.curvature(q)
                    dp -= d * h * curvature * dq
                    dp2 -= d * h * curvature * dq2
        if tangent:
            sign = np.sign(dq)
            flipped = (sign != 0) & (sign != last_sign)
            crossings += flipped
            last_sign = np.where(sign != 0, sign, last_sign)
        if record:
            q_samples[step + 1], p_samples[step + 1] = q, p

    result = FlowResult(q, p, action, dq, dp, crossings)
    if tangent:
        result.dq_dq0, result.dp_dq0 = dq2, dp2
    if record:
        result.times, result.q_samples, result.p_samples = times, q_samples, p_samples
    return result
