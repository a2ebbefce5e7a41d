"""
Analytic potentials with derivatives.

The grid engines only need V(q) sampled on a grid; trajectories and
ensembles need the force and the curvature, so every potential carries all
three in closed form.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConfigFunction, Grid, PhysicalParams

KINDS = ("free", "harmonic", "anharmonic", "double_well", "quartic")


@dataclass(frozen=True)
class Potential:
    """
    V(q) for one of the supported families.

    free:         0
    harmonic:     m omega^2 q^2 / 2
    anharmonic:   m omega^2 q^2 / 2 + lam q^4
    double_well:  lam (q^2 - a^2)^2
    quartic:      lam q^4
    """

    kind: str = "free"
    omega: float = 1.0
    lam: float = 0.0
    a: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")

    @classmethod
    def free(cls) -> "Potential":
        return cls("free")

    @classmethod
    def harmonic(cls, omega: float, params: Optional[PhysicalParams] = None) -> "Potential":
        return cls("harmonic", omega=omega, m=(params or PhysicalParams()).m)

    @classmethod
    def double_well(cls, lam: float = 1.0, a: float = 1.0) -> "Potential":
        return cls("double_well", lam=lam, a=a)

    @property
    def has_analytic_kernel(self) -> bool:
        return self.kind in ("free", "harmonic")

    def value(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == "free":
            return np.zeros_like(q)
        if self.kind == "harmonic":
            return 0.5 * self.m * self.omega**2 * q**2
        if self.kind == "anharmonic":
            return 0.5 * self.m * self.omega**2 * q**2 + self.lam * q**4
        if self.kind == "double_well":
            return self.lam * (q**2 - self.a**2) ** 2
        return self.lam * q**4

    def gradient(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == "free":
            return np.zeros_like(q)
        if self.kind == "harmonic":
            return self.m * self.omega**2 * q
        if self.kind == "anharmonic":
            return self.m * self.omega**2 * q + 4 * self.lam * q**3
        if self.kind == "double_well":
            return 4 * self.lam * q * (q**2 - self.a**2)
        return 4 * self.lam * q**3

    def curvature(self, q):
        q = np.asarray(q, dtype=float)
        if self.kind == "free":
            return np.zeros_like(q)
        if self.kind == "harmonic":
            return self.m * self.omega**2 * np.ones_like(q)
        if self.kind == "anharmonic":
            return self.m * self.omega**2 + 12 * self.lam * q**2
        if self.kind == "double_well":
            return self.lam * (12 * q**2 - 4 * self.a**2)
        return 12 * self.lam * q**2

    def on_grid(self, grid: Grid) -> ConfigFunction:
        return ConfigFunction(grid, self.value(grid.points))
