"""
CSV import/export for wavefunctions, ensembles, trajectories and kernel scans.
"""

import warnings
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
import pandas as pd

from .classical_limit import ClassicalEnsemble
from .core import Grid, WaveFunction
from .exceptions import GridMismatchError


class TableLoader:
    """Loads and validates one kind of numeric table from a CSV file."""

    REQUIRED_COLUMNS = {
        "wavefunction": ["x", "re", "im"],
        "ensemble": ["q", "p", "w"],
        "trajectory": ["t", "q", "p"],
        "kernel": ["x2", "x1", "re", "im"],
    }

    def __init__(self, csv_path: Union[str, Path], kind: str):
        """
        Initialize the loader with a CSV file path.

        Args:
            csv_path: Path to the CSV file
            kind: One of wavefunction, ensemble, trajectory, kernel
        """
        if kind not in self.REQUIRED_COLUMNS:
            raise ValueError(f"unknown table kind {kind!r}")
        self.csv_path = Path(csv_path)
        self.kind = kind
        self._validate_file_exists()

    def _validate_file_exists(self) -> None:
        if not self.csv_path.exists():
            raise FileNotFoundError(f"CSV file not found: {self.csv_path}")

    def _validate_columns(self, df: pd.DataFrame) -> None:
        missing_cols = set(self.REQUIRED_COLUMNS[self.kind]) - set(df.columns)
        if missing_cols:
            raise ValueError(f"Missing required columns: {missing_cols}")

    def _validate_data_types(self, df: pd.DataFrame) -> pd.DataFrame:
        df = df.copy()
        for col in self.REQUIRED_COLUMNS[self.kind]:
            df[col] = pd.to_numeric(df[col], errors="coerce")
        return df

    def load(self) -> pd.DataFrame:
        """
        Load the table, dropping rows with missing or non-numeric entries.

        Raises:
            FileNotFoundError: If the CSV file does not exist
            ValueError: If required columns are missing
        """
        df = pd.read_csv(self.csv_path, comment="#")
        self._validate_columns(df)
        df = self._validate_data_types(df)
        initial_len = len(df)
        df = df.dropna(subset=self.REQUIRED_COLUMNS[self.kind])
        if self.kind == "ensemble":
            df = df[df["w"] >= 0]
        removed = initial_len - len(df)
        if removed > 0:
            warnings.warn(f"Removed {removed} invalid rows from {self.csv_path.name}")
        return df.reset_index(drop=True)


def save_wavefunction(psi: WaveFunction, path: Union[str, Path]) -> None:
    pd.DataFrame({
        "x": psi.grid.points,
        "re": psi.amplitudes.real,
        "im": psi.amplitudes.imag,
    }).to_csv(path, index=False)


def load_wavefunction(path: Union[str, Path], grid: Optional[Grid] = None) -> WaveFunction:
    """
    Read amplitudes sampled on a uniform grid.

    Args:
        path: CSV with columns x, re, im
        grid: Expected grid; inferred from the x column when omitted

    Raises:
        GridMismatchError: If the x column does not match the grid
    """
    df = TableLoader(path, "wavefunction").load()
    x = df["x"].to_numpy()
    if grid is None:
        grid = Grid(float(x[0]), float(x[-1]), len(x))
    if len(x) != grid.n_points or not np.allclose(x, grid.points, rtol=0, atol=1e-9 * grid.dx):
        raise GridMismatchError(f"{path}: x column does not match {grid}")
    return WaveFunction(grid, df["re"].to_numpy() + 1j * df["im"].to_numpy())


def save_ensemble(ens: ClassicalEnsemble, path: Union[str, Path]) -> None:
    ens.to_frame().to_csv(path, index=False)


def load_ensemble(path: Union[str, Path], time_tag: float = 0.0) -> ClassicalEnsemble:
    """Read (q, p, w) samples; weights are renormalized if rows were dropped."""
    df = TableLoader(path, "ensemble").load()
    total = df["w"].sum()
    if not total > 0:
        raise ValueError(f"{path}: ensemble has no positive weight")
    if abs(total - 1.0) > 1e-12:
        warnings.warn(f"Renormalized ensemble weights (sum was {total:.6g})")
        df["w"] = df["w"] / total
    return ClassicalEnsemble.from_frame(df, time_tag)


def write_table(
    df: pd.DataFrame,
    path: Union[str, Path],
    header_lines: Iterable[str] = (),
    plot_hint: Optional[str] = None,
) -> None:
    """CSV preceded by '#' comment lines (resolved config, gnuplot hint)."""
    path = Path(path)
    with path.open("w") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        if plot_hint:
            handle.write(f"# gnuplot: {plot_hint}\n")
        df.to_csv(handle, index=False)
