"""
Tests for CSV loading and writing.
"""

import numpy as np
import pandas as pd
import pytest

from weakpath.classical_limit import ClassicalEnsemble
from weakpath.core import Grid, gaussian_wavepacket
from weakpath.data_io import (
    TableLoader,
    load_ensemble,
    load_wavefunction,
    save_ensemble,
    save_wavefunction,
    write_table,
)
from weakpath.exceptions import GridMismatchError


@pytest.fixture
def grid():
    return Grid(-5.0, 5.0, 64)


@pytest.fixture
def ensemble_csv(tmp_path):
    path = tmp_path / "ensemble.csv"
    pd.DataFrame({"q": [0.0, 1.0, 2.0], "p": [0.5, -0.5, 0.0], "w": [0.25, 0.25, 0.5]}).to_csv(path, index=False)
    return path


class TestTableLoader:
    """Test suite for TableLoader."""

    def test_load(self, ensemble_csv):
        """Test a valid table loads with its required columns."""
        df = TableLoader(ensemble_csv, "ensemble").load()
        assert len(df) == 3
        assert set(TableLoader.REQUIRED_COLUMNS["ensemble"]).issubset(df.columns)

    def test_missing_file(self, tmp_path):
        """Test a missing file is reported."""
        with pytest.raises(FileNotFoundError, match="CSV file not found"):
            TableLoader(tmp_path / "nope.csv", "ensemble")

    def test_unknown_kind(self, ensemble_csv):
        """Test unknown table kinds are rejected."""
        with pytest.raises(ValueError, match="unknown table kind"):
            TableLoader(ensemble_csv, "spectrum")

    def test_missing_columns(self, tmp_path):
        """Test missing columns are named."""
        path = tmp_path / "bad.csv"
        pd.DataFrame({"q": [0.0], "p": [0.0]}).to_csv(path, index=False)
        with pytest.raises(ValueError, match="Missing required columns"):
            TableLoader(path, "ensemble").load()

    def test_invalid_rows_dropped(self, tmp_path):
        """Test non-numeric and negative-weight rows are removed with a warning."""
        path = tmp_path / "dirty.csv"
        path.write_text("q,p,w\n0.0,0.0,0.5\nabc,0.0,0.2\n1.0,0.0,-0.1\n2.0,1.0,0.5\n")
        with pytest.warns(UserWarning, match="Removed 2 invalid rows"):
            df = TableLoader(path, "ensemble").load()
        assert list(df["q"]) == [0.0, 2.0]

    def test_comment_lines_skipped(self, tmp_path):
        """Test '#' header lines written by write_table are ignored."""
        path = tmp_path / "commented.csv"
        write_table(pd.DataFrame({"t": [0.0, 1.0], "q": [0.0, 1.0], "p": [1.0, 1.0]}), path, ["weakpath test"])
        assert len(TableLoader(path, "trajectory").load()) == 2


class TestWaveFunctionFiles:
    """Test suite for wave-function CSV files."""

    def test_round_trip(self, grid, tmp_path):
        """Test saved amplitudes load back on the inferred grid."""
        psi = gaussian_wavepacket(grid, 0.0, 1.0, 1.0)
        path = tmp_path / "psi.csv"
        save_wavefunction(psi, path)
        loaded = load_wavefunction(path)
        assert loaded.grid.n_points == grid.n_points
        assert np.max(np.abs(loaded.amplitudes - psi.amplitudes)) < 1e-12

    def test_grid_mismatch(self, grid, tmp_path):
        """Test a file sampled on another grid is rejected."""
        path = tmp_path / "psi.csv"
        save_wavefunction(gaussian_wavepacket(grid, 0.0, 0.0, 1.0), path)
        with pytest.raises(GridMismatchError):
            load_wavefunction(path, Grid(-5.0, 5.0, 65))


class TestEnsembleFiles:
    """Test suite for ensemble CSV files."""

    def test_round_trip(self, tmp_path):
        """Test a saved ensemble loads back unchanged."""
        ens = ClassicalEnsemble.from_gaussian(0.0, 0.0, 1.0, 20, seed=4)
        path = tmp_path / "ens.csv"
        save_ensemble(ens, path)
        loaded = load_ensemble(path, time_tag=0.5)
        assert loaded.q == pytest.approx(ens.q)
        assert loaded.time_tag == 0.5

    def test_renormalized_after_drop(self, tmp_path):
        """Test dropped rows trigger renormalization of the weights."""
        path = tmp_path / "ens.csv"
        path.write_text("q,p,w\n0.0,0.0,0.25\n1.0,0.0,0.25\nx,0.0,0.5\n")
        with pytest.warns(UserWarning):
            ens = load_ensemble(path)
        assert ens.w == pytest.approx([0.5, 0.5])

    def test_no_weight(self, tmp_path):
        """Test an ensemble with zero total weight is rejected."""
        path = tmp_path / "ens.csv"
        path.write_text("q,p,w\n0.0,0.0,0.0\n")
        with pytest.raises(ValueError, match="no positive weight"):
            load_ensemble(path)


class TestWriteTable:
    """Test suite for write_table."""

    def test_header_and_hint(self, tmp_path):
        """Test comment lines precede the CSV body."""
        path = tmp_path / "out.csv"
        write_table(pd.DataFrame({"a": [1], "b": [2]}), path, ["weakpath 1.0", "config: {}"], "plot 'FILE'")
        lines = path.read_text().splitlines()
        assert lines[:3] == ["# weakpath 1.0", "# config: {}", "# gnuplot: plot 'FILE'"]
        assert lines[3] == "a,b"
