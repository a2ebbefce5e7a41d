"""
Committed reference experiments, one per scenario.

Each fixture is a plain experiment config; `write_fixtures` dumps them to
fixtures/*.json and the builders below turn the physics fixtures into ready
objects for tests and examples.
"""

import json
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from .config import PointerParams, WeakValueParams, parse_config
from .core import WaveFunction
from .interferometer import ModeNetwork, build_nested_mz
from .weak_values import WeakMeasurementSetup

SCAR_SIGMA = 1.0 / (2.0 * np.sqrt(np.pi))

TUNED_PSI_I = [1.0, 0.0, 0.0]
TUNED_B_F = [0.5, 0.5, 0.7071067811865476]


def _packet(x0: float, sigma: float, p0: float = 0.0) -> Dict:
    return {"x0": x0, "p0": p0, "sigma": sigma}


def anomalous_parameters() -> Dict:
    """Two packets pre- and postselected with a near-cancelling denominator."""
    return {
        "grid": {"x_min": -12.0, "x_max": 12.0, "n_points": 256},
        "psi_i": {"packets": [_packet(-3.0, 0.7), _packet(3.0, 0.7)]},
        "b_f": {"packets": [_packet(-3.0, 0.7), _packet(3.0, 0.7)], "coefficients": [1.0, -0.8]},
        "t_i": 0.0,
        "t_w": 0.1,
        "t_f": 0.2,
        "observable": {"kind": "smooth_indicator", "low": 1.5, "high": 4.5, "edge": 0.5},
        "profile": {"uniform": True},
        "g": 0.02,
        "dt": 0.001,
    }


def pointer_parameters() -> Dict:
    params = anomalous_parameters()
    params.update({
        "probe_grid": {"x_min": -10.0, "x_max": 10.0, "n_points": 256},
        "probe": _packet(0.0, 1.0),
        "couplings": [0.01, 0.02, 0.04],
        "tau": 0.004,
    })
    return params


def scar_parameters() -> Dict:
    return {
        "grid": {"x_min": -20.0, "x_max": 20.0, "n_points": 641},
        "omega": 1.0,
        "x0": 1.5,
        "x_p": 0.0,
        "t_w": float(np.pi / 2),
        "periods": 1.0,
        "sigma": float(SCAR_SIGMA),
        "dt": 0.01,
    }


def interferometer_parameters() -> Dict:
    return {
        "phi_B": float(np.pi),
        "phi_C": 0.0,
        "psi_i": TUNED_PSI_I,
        "b_f": TUNED_B_F,
    }


FIXTURES: Dict[str, Dict] = {
    "propagate": {
        "scenario": "propagate",
        "parameters": {
            "grid": {"x_min": -10.0, "x_max": 10.0, "n_points": 256},
            "potential": {"kind": "harmonic", "omega": 1.0},
            "initial": {"packets": [_packet(1.0, 0.7071067811865476)]},
            "t_span": float(2 * np.pi),
            "dt": 0.01,
        },
        "output": {"format": "csv"},
    },
    "weak-value": {"scenario": "weak-value", "parameters": anomalous_parameters()},
    "pointer": {"scenario": "pointer", "parameters": pointer_parameters()},
    "infer-propagator": {
        "scenario": "infer-propagator",
        "parameters": {
            "grid": {"x_min": -15.0, "x_max": 15.0, "n_points": 256},
            "psi_i": {"packets": [_packet(0.0, 1.5, 0.5)]},
            "t_w": 0.5,
            "t_f": 1.0,
            "q_values": [-1.0, -0.5, 0.0, 0.5, 1.0],
            "xf_values": [-1.0, -0.5, 0.0, 0.5, 1.0],
            "kernel_method": "analytic",
        },
        "output": {"format": "csv"},
    },
    "interferometer": {"scenario": "interferometer", "parameters": interferometer_parameters()},
    "semiclassical": {
        "scenario": "semiclassical",
        "parameters": {
            "potential": {"kind": "harmonic", "omega": 1.0},
            "x_i": 0.3,
            "x_f": -0.5,
            "durations": [0.5, 1.0, 2.0, 3.0, 3.3, 4.0],
        },
        "output": {"format": "csv"},
    },
    "scar": {"scenario": "scar", "parameters": scar_parameters()},
    "classical": {
        "scenario": "classical",
        "parameters": {
            "grid": {"x_min": -10.0, "x_max": 10.0, "n_points": 401},
            "physics": {"hbar": 2.0},
            "ensemble": _packet(0.0, 1.0),
            "n_samples": 100000,
            "duration": 1.0,
            "observable": {"kind": "position"},
            "domain": {"kind": "above", "low": 0.0},
        },
        "seed": 7,
    },
}


def write_fixtures(directory: Union[str, Path] = "fixtures") -> List[Path]:
    """Write every fixture config as <scenario>.json; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, config in FIXTURES.items():
        parse_config(config, name)
        path = directory / f"{name}.json"
        path.write_text(json.dumps(config, indent=2) + "\n")
        written.append(path)
    return written


def anomalous_setup() -> WeakMeasurementSetup:
    return WeakValueParams.model_validate(anomalous_parameters()).build_setup()


def anomalous_probe() -> WaveFunction:
    return PointerParams.model_validate(pointer_parameters()).build_probe()


def tuned_network() -> ModeNetwork:
    return build_nested_mz(phi_B=np.pi, phi_C=0.0)


def dark_f_network() -> ModeNetwork:
    """Inner loop tuned so the B and C amplitudes cancel toward F."""
    return build_nested_mz(phi_B=0.0, phi_C=0.0)
