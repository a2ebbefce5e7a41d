"""
Scenario orchestration: turns a validated experiment config into a result
record and, where the scenario produces array data, a table.
"""

import dataclasses
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .classical_limit import (
    ClassicalEnsemble,
    PostselectionDomain,
    conditional_pointer_shift,
    unconditioned_average_kick,
)
from .config import DomainModel, ExperimentConfig
from .core import ConfigFunction, inner_product
from .coupling import extrapolate_shift_slope, run_pointer_pipeline
from .data_io import write_table
from .exceptions import CausticError
from .interferometer import build_nested_mz, design_postselection, weak_trace
from .propagators import analytic_kernel, step_count, trotter_propagate
from .semiclassical import ShootingSolver, kernel_term, periodic_orbit_spec, scar_autocorrelation
from .weak_values import PathIntegralEngine, infer_propagator_scan, scan_weak_values, weak_value_operator, weak_value_path

logger = logging.getLogger(__name__)

Outcome = Tuple[Dict[str, Any], Optional[pd.DataFrame]]

PLOT_HINTS = {
    "propagate": "plot 'FILE' using 1:4 with lines",
    "weak-value": "plot 'FILE' using 1:2 with lines, '' using 1:3 with lines",
    "pointer": "plot 'FILE' using 1:4 with linespoints",
    "infer-propagator": "splot 'FILE' using 1:2:3",
    "semiclassical": "plot 'FILE' using 1:3 with lines, '' using 1:5 with points",
}


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays and complex numbers for JSON."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _domain(model: DomainModel) -> PostselectionDomain:
    if model.kind == "all":
        return PostselectionDomain.everything()
    if model.kind == "above":
        return PostselectionDomain.half_space(model.low, above=True)
    if model.kind == "below":
        return PostselectionDomain.half_space(model.high, above=False)
    return PostselectionDomain.interval(model.low, model.high)


class ExperimentRunner:
    """
    Coordinates one experiment: resolves the scenario parameters, runs the
    physics, and writes the versioned output.
    """

    def __init__(self, config: ExperimentConfig, threads: Optional[int] = None):
        """
        Initialize the runner.

        Args:
            config: Validated experiment config
            threads: Worker count for scans (default: config value, then CPU count)
        """
        self.config = config
        self.params = config.scenario_parameters()
        self.threads = threads or config.threads or os.cpu_count() or 1
        self._handlers: Dict[str, Callable[[], Outcome]] = {
            "propagate": self._propagate,
            "weak-value": self._weak_value,
            "pointer": self._pointer,
            "infer-propagator": self._infer_propagator,
            "interferometer": self._interferometer,
            "semiclassical": self._semiclassical,
            "scar": self._scar,
            "classical": self._classical,
        }

    def _map(self, func, items):
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(func, items))

    def run(self) -> Outcome:
        """
        Run the configured scenario.

        Returns:
            (result record, table or None)

        Raises:
            WeakPathError: Physics-layer rejections, unchanged
        """
        logger.info("running scenario %s", self.config.scenario)
        result, table = self._handlers[self.config.scenario]()
        return to_jsonable(result), table

    def _propagate(self) -> Outcome:
        p = self.params
        grid, params = p.grid.build(), p.physics.build()
        V = p.potential.build(params).on_grid(grid)
        psi0 = p.initial.build(grid, params)
        psi_t = trotter_propagate(psi0, V, p.t_span, step_count(p.t_span, p.dt), params)
        result = {
            "summary": {
                "norm_drift": abs(psi_t.norm_squared() - psi0.norm_squared()),
                "return_fidelity": abs(inner_product(psi0, psi_t)) ** 2,
            },
            "position_expectation": [psi0.position_expectation(), psi_t.position_expectation()],
            "momentum_expectation": [psi0.momentum_expectation(params), psi_t.momentum_expectation(params)],
        }
        table = pd.DataFrame({
            "x": grid.points,
            "re": psi_t.amplitudes.real,
            "im": psi_t.amplitudes.imag,
            "density": np.abs(psi_t.amplitudes) ** 2,
        })
        return result, table

    def _weak_value(self) -> Outcome:
        p = self.params
        setup = p.build_setup()
        key = setup.hash()
        engine = PathIntegralEngine.from_setup(setup, p.kernel_method)
        path = weak_value_path(setup, engine)
        operator = None
        if setup.profile.kind != "contact":
            operator = weak_value_operator(setup, setup.localized_observable())
        else:
            logger.info("contact profile: reporting the path route only")
        A_values = setup.A.values
        low, high = float(A_values.min()), float(A_values.max())
        reference = operator if operator is not None else path
        re = reference.value.real
        summary = {
            "Re_Aw": re,
            "Im_Aw": reference.value.imag,
            "anomalous": bool(re < low or re > high),
        }
        if operator is not None:
            summary["route_difference"] = abs(operator.value - path.value) / max(abs(operator.value), 1e-300)
        result = {
            "summary": summary,
            "A_range": [low, high],
            "operator": operator.to_record(key) if operator is not None else None,
            "path": path.to_record(key),
        }
        table = None
        if p.scan_q:
            contact = dataclasses.replace(setup, profile=dataclasses.replace(setup.profile, width=0.0, uniform=False))
            table = scan_weak_values(contact, p.scan_q, engine)
        return result, table

    def _pointer(self) -> Outcome:
        p = self.params
        setup = p.build_setup()
        phi = p.build_probe()

        def run_one(g):
            return run_pointer_pipeline(dataclasses.replace(setup, g=g), phi, p.tau, p.frozen_probe)

        reports = self._map(run_one, p.couplings)
        shifts = {r.g: r.shift for r in reports}
        reference = reports[0].Re_Aw_ref
        summary = {"Re_Aw_ref": reference}
        if len(shifts) >= 2:
            slope = extrapolate_shift_slope(shifts)
            summary.update({"extrapolated_slope": slope, "relative_error": abs(slope - reference) / abs(reference)})
        table = pd.DataFrame([r.to_dict() for r in reports])
        return {"summary": summary, "reports": [r.to_dict() for r in reports]}, table

    def _infer_propagator(self) -> Outcome:
        p = self.params
        grid, params = p.grid.build(), p.physics.build()
        potential = p.potential.build(params)
        engine = PathIntegralEngine(grid, potential, p.t_i, p.t_w, p.t_f, params, p.kernel_method, p.dt)
        psi = p.psi_i.build(grid, params)
        table = infer_propagator_scan(
            engine, psi, ConfigFunction.constant(grid, 1.0), p.q_values, p.xf_values, workers=self.threads
        )
        summary = {"points": len(table)}
        if potential.has_analytic_kernel:
            exact = analytic_kernel(potential, table["x_f"].to_numpy(), table["Q_w"].to_numpy(), p.t_f - p.t_w, params)
            inferred = table["re"].to_numpy() + 1j * table["im"].to_numpy()
            table["exact_re"], table["exact_im"] = exact.real, exact.imag
            summary["max_relative_error"] = float(np.max(np.abs(inferred - exact) / np.abs(exact)))
        return {"summary": summary, "scan": table.to_dict(orient="records")}, table

    def _interferometer(self) -> Outcome:
        p = self.params
        net = build_nested_mz(p.theta1, p.theta2, p.theta3, p.theta4, p.phi_B, p.phi_C, p.phi_outer)
        b_f = np.asarray(p.b_f, dtype=complex) if p.b_f is not None else design_postselection(
            net, p.psi_i, p.dark_sites, p.design_theta
        )
        trace = weak_trace(net, p.psi_i, b_f)
        result = {
            "summary": {"unitarity_defect": net.unitarity_defect()},
            "network": net.to_dict(),
            "b_f": b_f,
            "sites": trace,
        }
        table = pd.DataFrame([{"site": site, **row} for site, row in trace.items()])
        return result, table

    def _semiclassical(self) -> Outcome:
        p = self.params
        params = p.physics.build()
        potential = p.potential.build(params)
        solver = ShootingSolver(potential, params, p.n_seeds, p.half_width, p.n_steps)
        seeds = np.linspace(p.bracket[0], p.bracket[1], p.n_seeds) if p.bracket else None

        def kernel_at(duration):
            paths = solver.solve(p.x_i, p.x_f, duration, seeds=seeds)
            value = sum(kernel_term(path, params) for path in paths) if paths else np.nan
            row = {
                "duration": duration,
                "n_paths": len(paths),
                "re": np.real(value),
                "im": np.imag(value),
                "maslov": ";".join(str(path.maslov) for path in paths),
            }
            if potential.has_analytic_kernel:
                try:
                    exact = complex(analytic_kernel(potential, p.x_f, p.x_i, duration, params))
                    row.update({"exact_re": exact.real, "exact_im": exact.imag,
                                "relative_error": abs(value - exact) / abs(exact)})
                except CausticError as exc:
                    logger.warning("skipping exact comparison at duration %s: %s", duration, exc)
            return row

        table = pd.DataFrame(self._map(kernel_at, p.durations))
        summary = {"durations": len(table), "max_paths": int(table["n_paths"].max())}
        if "relative_error" in table:
            summary["max_relative_error"] = float(table["relative_error"].max())
        return {"summary": summary, "kernels": table.to_dict(orient="records")}, table

    def _scar(self) -> Outcome:
        p = self.params
        setup = p.build_setup()
        params = setup.params
        grid = setup.grid
        x_p = float(grid.points[grid.index_of(p.x_p)])
        wv = weak_value_path(setup)
        orbit = periodic_orbit_spec(p.x0, x_p, p.t_w, setup.t_f, setup.potential, params)
        reconstructed = scar_autocorrelation(wv, orbit, 1.0, setup.psi_i.value_at(p.x0), p.sigma, params.hbar)
        direct = inner_product(setup.psi_i, setup.evolved_preselection())
        result = {
            "summary": {
                "relative_error": abs(reconstructed - direct) / abs(direct),
                "Re_Aw": wv.value.real,
                "Im_Aw": wv.value.imag,
            },
            "reconstructed": reconstructed,
            "direct": direct,
            "orbit": {"x0": orbit.x0, "x_p": orbit.x_p, "S_po": orbit.S_po,
                      "amp_out": orbit.amp_out, "amp_back": orbit.amp_back},
        }
        return result, None

    def _classical(self) -> Outcome:
        p = self.params
        grid, params = p.grid.build(), p.physics.build()
        potential = p.potential.build(params)
        ens = ClassicalEnsemble.from_gaussian(
            p.ensemble.x0, p.ensemble.p0, p.ensemble.sigma, p.n_samples, self.config.seed, params
        )
        A = p.observable.build(grid)
        profile = p.profile.build()
        report = conditional_pointer_shift(
            ens, A, profile, p.g, _domain(p.domain), potential, p.duration, params, p.dt
        )
        result = {
            "summary": report.to_dict(),
            "unconditioned_kick": unconditioned_average_kick(ens, A, profile, p.g),
        }
        return result, pd.DataFrame([report.to_dict()])


def write_output(
    config: ExperimentConfig, result: Dict[str, Any], table: Optional[pd.DataFrame], path: Path
) -> Path:
    """
    JSON: {"version", "config", "result"}. CSV: the scenario table (or the
    flattened result) under '#' lines carrying the version and resolved config.

    The resolved config carries the validated scenario parameters with every
    default filled in.
    """
    resolved = {
        **config.model_dump(mode="json"),
        "parameters": config.scenario_parameters().model_dump(mode="json"),
    }
    path = Path(path)
    if config.output.format == "json":
        document = {"version": __version__, "config": resolved, "result": result}
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
        return path
    if table is None:
        table = pd.json_normalize(result)
    hint = PLOT_HINTS.get(config.scenario)
    write_table(
        table,
        path,
        header_lines=[f"weakpath {__version__}", "config: " + json.dumps(resolved, sort_keys=True)],
        plot_hint=hint.replace("FILE", path.name) if hint else None,
    )
    return path


def default_output_path(config: ExperimentConfig) -> Path:
    if config.output.path:
        return Path(config.output.path)
    return Path(f"{config.scenario}_result.{config.output.format}")
