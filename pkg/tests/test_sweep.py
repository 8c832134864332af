"""Sweep grid expansion and CSV output."""

import csv
import io
import json

import pytest

from backoffsim.metrics import ConfigError, SimConfig
from backoffsim.sweep import CSV_COLUMNS, SweepGrid, run_cell, run_sweep, write_rows


SMALL_BASE = SimConfig(n_nodes=12, area=80.0, range_m=40.0, total_events=5, lam=2.0)


class TestGrid:
    def test_cell_count_and_order(self):
        grid = SweepGrid(
            base=SMALL_BASE,
            protocols=("arbp", "ibsp"),
            n_nodes=(12,),
            lambdas=(2.0, 4.0),
            seeds=(0, 1, 2),
        )
        cells = grid.cells()
        assert len(cells) == 2 * 2 * 3
        # protocol varies slowest, seed fastest
        assert [c.protocol for c in cells[:6]] == ["arbp"] * 6
        assert [c.seed for c in cells[:3]] == [0, 1, 2]
        assert cells[0].lam == 2.0 and cells[3].lam == 4.0

    def test_from_file_roundtrip(self, tmp_path):
        spec = {
            "base": {"n_nodes": 12, "total_events": 5},
            "protocols": ["arbp"],
            "seeds": [0, 1],
        }
        path = tmp_path / "grid.json"
        path.write_text(json.dumps(spec))
        grid = SweepGrid.from_file(str(path))
        assert grid.base.n_nodes == 12
        assert len(grid.cells()) == 2

    def test_from_file_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "grid.json"
        path.write_text(json.dumps({"base": {"warp_speed": 9}}))
        with pytest.raises(ConfigError):
            SweepGrid.from_file(str(path))
        path.write_text(json.dumps({"frobnicate": True}))
        with pytest.raises(ConfigError):
            SweepGrid.from_file(str(path))


class TestRows:
    def test_run_cell_row_shape(self):
        row = run_cell(SMALL_BASE)
        assert set(row) == set(CSV_COLUMNS)
        assert 0.0 <= float(row["success_rate"]) <= 100.0

    def test_write_rows_header_and_comments(self):
        buf = io.StringIO()
        write_rows([], buf, digest="abc123")
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("# backoffsim")
        assert "abc123" in lines[1]
        assert lines[2] == ",".join(CSV_COLUMNS)

    def test_run_sweep_writes_parseable_csv(self, tmp_path):
        grid = SweepGrid(
            base=SMALL_BASE, protocols=("arbp",), n_nodes=(12,), seeds=(0, 1)
        )
        out = tmp_path / "sweep.csv"
        rows = run_sweep(grid, str(out))
        assert len(rows) == 2
        with open(out) as fh:
            data = [r for r in csv.DictReader(l for l in fh if not l.startswith("#"))]
        assert len(data) == 2
        assert data[0]["protocol"] == "arbp"

    def test_run_sweep_skips_invalid_cells(self, tmp_path):
        grid = SweepGrid(
            base=SMALL_BASE, protocols=("arbp",), n_nodes=(12, 0), seeds=(0,)
        )
        out = tmp_path / "sweep.csv"
        rows = run_sweep(grid, str(out))
        assert len(rows) == 1
        text = out.read_text()
        assert "# skipped cell" in text

    def test_identical_config_rows_reproducible(self, tmp_path):
        grid = SweepGrid(base=SMALL_BASE, protocols=("ibsp",), n_nodes=(12,), seeds=(3,))
        a = run_sweep(grid, str(tmp_path / "a.csv"))
        b = run_sweep(grid, str(tmp_path / "b.csv"))
        drop_wall = lambda r: {k: v for k, v in r.items() if k != "wall_time_s"}
        assert [drop_wall(r) for r in a] == [drop_wall(r) for r in b]
