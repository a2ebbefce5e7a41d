"""
Experiment configuration schemas.

An experiment file names one scenario and carries that scenario's parameter
block; both levels reject unknown keys.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core import ConfigFunction, Grid, PhysicalParams, WaveFunction, gaussian_wavepacket
from .exceptions import ConfigError
from .potentials import KINDS, Potential
from .weak_values import InteractionProfile, WeakMeasurementSetup

Scenario = Literal[
    "propagate", "weak-value", "pointer", "infer-propagator",
    "interferometer", "semiclassical", "scar", "classical",
]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridModel(StrictModel):
    x_min: float
    x_max: float
    n_points: int = Field(ge=8)

    def build(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.n_points)


class PhysicsModel(StrictModel):
    hbar: float = Field(1.0, gt=0)
    m: float = Field(1.0, gt=0)
    M: float = Field(1.0, gt=0)

    def build(self) -> PhysicalParams:
        return PhysicalParams(self.hbar, self.m, self.M)


class PotentialModel(StrictModel):
    kind: str = "free"
    omega: float = 1.0
    lam: float = 0.0
    a: float = 1.0

    @field_validator("kind")
    @classmethod
    def known_kind(cls, value: str) -> str:
        if value not in KINDS:
            raise ValueError(f"unknown potential kind {value!r}")
        return value

    def build(self, params: PhysicalParams) -> Potential:
        return Potential(self.kind, self.omega, self.lam, self.a, params.m)


class PacketModel(StrictModel):
    x0: float
    p0: float = 0.0
    sigma: float = Field(gt=0)


class StateModel(StrictModel):
    """Normalized superposition sum_k c_k G_k of Gaussian packets."""

    packets: List[PacketModel] = Field(min_length=1)
    coefficients: Optional[List[float]] = None

    @model_validator(mode="after")
    def matching_lengths(self):
        if self.coefficients is not None and len(self.coefficients) != len(self.packets):
            raise ValueError("coefficients must match packets one to one")
        return self

    def build(self, grid: Grid, params: PhysicalParams) -> WaveFunction:
        coefficients = self.coefficients or [1.0] * len(self.packets)
        amps = sum(
            c * gaussian_wavepacket(grid, pk.x0, pk.p0, pk.sigma, params).amplitudes
            for c, pk in zip(coefficients, self.packets)
        )
        return WaveFunction(grid, amps).normalized()


class ObservableModel(StrictModel):
    kind: Literal["indicator", "smooth_indicator", "constant", "position", "tanh"] = "constant"
    value: float = 1.0
    low: float = 0.0
    high: float = 1.0
    edge: float = Field(0.5, gt=0)

    def build(self, grid: Grid) -> ConfigFunction:
        if self.kind == "indicator":
            return ConfigFunction.indicator(grid, self.low, self.high)
        if self.kind == "smooth_indicator":
            return ConfigFunction.smooth_indicator(grid, self.low, self.high, self.edge)
        if self.kind == "position":
            return ConfigFunction(grid, self.value * grid.points)
        if self.kind == "tanh":
            return ConfigFunction(grid, self.value * np.tanh(grid.points))
        return ConfigFunction.constant(grid, self.value)


class ProfileModel(StrictModel):
    Q_w: float = 0.0
    width: float = Field(0.0, ge=0)
    uniform: bool = False

    def build(self) -> InteractionProfile:
        return InteractionProfile(self.Q_w, self.width, self.uniform)


class PropagateParams(StrictModel):
    grid: GridModel
    physics: PhysicsModel = PhysicsModel()
    potential: PotentialModel = PotentialModel()
    initial: StateModel
    t_span: float
    dt: float = Field(0.01, gt=0)


class WeakValueParams(StrictModel):
    grid: GridModel
    physics: PhysicsModel = PhysicsModel()
    potential: PotentialModel = PotentialModel()
    psi_i: StateModel
    b_f: StateModel
    t_i: float = 0.0
    t_w: float
    t_f: float
    observable: ObservableModel = ObservableModel()
    profile: ProfileModel = ProfileModel()
    g: float = 0.01
    dt: float = Field(0.01, gt=0)
    kernel_method: Literal["trotter", "analytic"] = "trotter"
    scan_q: Optional[List[float]] = None

    @model_validator(mode="after")
    def ordered_times(self):
        if not self.t_i < self.t_w < self.t_f:
            raise ValueError("need t_i < t_w < t_f")
        return self

    def build_setup(self) -> WeakMeasurementSetup:
        grid = self.grid.build()
        params = self.physics.build()
        return WeakMeasurementSetup(
            psi_i=self.psi_i.build(grid, params),
            b_f=self.b_f.build(grid, params),
            t_i=self.t_i,
            t_w=self.t_w,
            t_f=self.t_f,
            A=self.observable.build(grid),
            profile=self.profile.build(),
            g=self.g,
            potential=self.potential.build(params),
            params=params,
            dt=self.dt,
        )


class PointerParams(WeakValueParams):
    probe_grid: GridModel
    probe: PacketModel
    couplings: List[float] = Field(default_factory=lambda: [0.01, 0.02, 0.04], min_length=1)
    tau: float = Field(gt=0)
    frozen_probe: bool = True

    def build_probe(self) -> WaveFunction:
        probe = self.probe
        return gaussian_wavepacket(self.probe_grid.build(), probe.x0, probe.p0, probe.sigma, self.physics.build())


class InferParams(StrictModel):
    grid: GridModel
    physics: PhysicsModel = PhysicsModel()
    potential: PotentialModel = PotentialModel()
    psi_i: StateModel
    t_i: float = 0.0
    t_w: float
    t_f: float
    q_values: List[float] = Field(min_length=1)
    xf_values: List[float] = Field(min_length=1)
    kernel_method: Literal["trotter", "analytic"] = "analytic"
    dt: float = Field(0.01, gt=0)


class InterferometerParams(StrictModel):
    theta1: float = np.pi / 4
    theta2: float = np.pi / 4
    theta3: float = np.pi / 4
    theta4: float = np.pi / 4
    phi_B: float = 0.0
    phi_C: float = 0.0
    phi_outer: float = 0.0
    psi_i: List[float] = Field(min_length=3, max_length=3)
    b_f: Optional[List[float]] = Field(None, min_length=3, max_length=3)
    dark_sites: List[str] = Field(default_factory=list)
    design_theta: float = np.pi / 4

    @model_validator(mode="after")
    def postselection_given(self):
        if self.b_f is None and not self.dark_sites:
            raise ValueError("give b_f or dark_sites to design one")
        return self


class SemiclassicalParams(StrictModel):
    physics: PhysicsModel = PhysicsModel()
    potential: PotentialModel = PotentialModel()
    x_i: float
    x_f: float
    durations: List[float] = Field(min_length=1)
    n_seeds: int = Field(64, ge=2)
    half_width: float = Field(20.0, gt=0)
    n_steps: int = Field(2000, ge=1)
    bracket: Optional[Tuple[float, float]] = None


class ScarParams(StrictModel):
    grid: GridModel
    physics: PhysicsModel = PhysicsModel()
    omega: float = Field(1.0, gt=0)
    x0: float
    x_p: float
    t_w: float
    periods: float = Field(1.0, gt=0)
    sigma: float = Field(gt=0)
    dt: float = Field(0.01, gt=0)

    def build_setup(self) -> WeakMeasurementSetup:
        """G pre- and postselected in a harmonic well, A = 1 in contact at x_p."""
        grid = self.grid.build()
        params = self.physics.build()
        G = gaussian_wavepacket(grid, self.x0, 0.0, self.sigma, params)
        return WeakMeasurementSetup(
            psi_i=G,
            b_f=G,
            t_i=0.0,
            t_w=self.t_w,
            t_f=self.period,
            A=ConfigFunction.constant(grid, 1.0),
            profile=InteractionProfile(self.x_p),
            potential=Potential.harmonic(self.omega, params),
            params=params,
            dt=self.dt,
        )

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega * self.periods


class DomainModel(StrictModel):
    kind: Literal["all", "above", "below", "interval"] = "above"
    low: float = 0.0
    high: float = 1.0


class ClassicalParams(StrictModel):
    grid: GridModel
    physics: PhysicsModel = PhysicsModel()
    potential: PotentialModel = PotentialModel()
    ensemble: PacketModel
    n_samples: int = Field(100_000, ge=1)
    duration: float = Field(gt=0)
    observable: ObservableModel = ObservableModel()
    profile: ProfileModel = ProfileModel(uniform=True)
    g: float = 1.0
    domain: DomainModel = DomainModel()
    dt: float = Field(0.01, gt=0)


SCENARIO_MODELS: Dict[str, Type[StrictModel]] = {
    "propagate": PropagateParams,
    "weak-value": WeakValueParams,
    "pointer": PointerParams,
    "infer-propagator": InferParams,
    "interferometer": InterferometerParams,
    "semiclassical": SemiclassicalParams,
    "scar": ScarParams,
    "classical": ClassicalParams,
}


class OutputModel(StrictModel):
    path: Optional[str] = None
    format: Literal["json", "csv"] = "json"


class ExperimentConfig(StrictModel):
    scenario: Scenario
    parameters: Dict[str, Any]
    output: OutputModel = OutputModel()
    seed: Optional[int] = None
    threads: Optional[int] = Field(None, ge=1)

    def scenario_parameters(self) -> StrictModel:
        return SCENARIO_MODELS[self.scenario].model_validate(self.parameters)


def _config_error(err: ValidationError, source: str, prefix: Tuple = ()) -> ConfigError:
    first = err.errors()[0]
    key_path = tuple(prefix) + tuple(first.get("loc", ()))
    where = ".".join(str(k) for k in key_path) or "<root>"
    return ConfigError(f"{source}: invalid config at {where}: {first.get('msg')}", key_path)


def parse_config(data: Union[Dict, str], source: str = "config") -> ExperimentConfig:
    """
    Validate a config mapping (or JSON text).

    Raises:
        ConfigError: With the key path of the first offending entry
    """
    try:
        if isinstance(data, str):
            data = json.loads(data)
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be an object")
        config = ExperimentConfig.model_validate(data)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: malformed JSON ({exc.msg})") from exc
    except ValidationError as exc:
        raise _config_error(exc, source) from exc
    try:
        config.scenario_parameters()
    except ValidationError as exc:
        raise _config_error(exc, source, prefix=("parameters",)) from exc
    return config


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), str(path))
