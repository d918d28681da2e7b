import json

import numpy as np
import pandas as pd
import pytest

from disperse_lab.geometry.spherical import RadialFunction, make_grid
from disperse_lab.storage.artifacts import (
    emit_plot,
    read_radial_csv,
    sidecar_path,
    slope_label,
    write_json,
    write_radial_csv,
    write_table_csv,
)
from disperse_lab.storage.run_history import RunLedgerDB
from disperse_lab.utils.errors import DomainError


class TestRadialCsv:
    def test_write_and_read(self, tmp_path, h3):
        grid = make_grid(4.0, 32)
        f = RadialFunction(
            grid, np.exp(-grid) * (1 + 0.5j), h3, metadata={"t": 1.0, "truncation": 40.0}
        )
        path = write_radial_csv(f, tmp_path / "out" / "kernel.csv", extra={"route": "test"})
        sidecar = json.loads(sidecar_path(path).read_text())
        assert sidecar["space"] == "H3(R)"
        assert sidecar["grid"]["points"] == 32
        assert sidecar["truncation"] == 40.0
        assert sidecar["route"] == "test"
        assert path.read_text().startswith("# radial function on H3(R)")

        back = read_radial_csv(path)
        assert back.space.label == "H3(R)"
        np.testing.assert_allclose(back.values, f.values, rtol=1e-11)
        assert back.metadata["truncation"] == 40.0
        assert back.metadata["t"] == 1.0

    def test_read_needs_a_space(self, tmp_path, h3):
        grid = make_grid(2.0, 8)
        path = write_radial_csv(RadialFunction(grid, np.ones_like(grid), h3), tmp_path / "f.csv")
        sidecar_path(path).unlink()
        with pytest.raises(DomainError):
            read_radial_csv(path)
        assert read_radial_csv(path, h3).grid.size == 8


class TestTablesAndJson:
    def test_table_header(self, tmp_path):
        frame = pd.DataFrame({"t": [1.0, 2.0], "value": [0.5, 0.25]})
        path = write_table_csv(frame, tmp_path / "t.csv", ["t: time", "value: norm"])
        lines = path.read_text().splitlines()
        assert lines[:3] == ["# t: time", "# value: norm", "t,value"]
        assert pd.read_csv(path, comment="#")["value"].tolist() == [0.5, 0.25]

    def test_json_handles_numpy(self, tmp_path):
        path = write_json(
            {"a": np.float64(1.5), "b": np.arange(3), "c": 1 + 2j}, tmp_path / "x.json"
        )
        assert json.loads(path.read_text()) == {"a": 1.5, "b": [0, 1, 2], "c": [1.0, 2.0]}


class TestPlots:
    def test_slope_annotation(self, tmp_path):
        t = np.geomspace(2.0, 50.0, 9)
        result = emit_plot((t, t**-1.5), tmp_path / "p.svg")
        assert result.slope == pytest.approx(-1.5)
        assert "slope −1.50" in result.path.read_text()

    def test_deterministic_bytes(self, tmp_path):
        t = np.geomspace(2.0, 50.0, 9)
        series = {"L4": (t, t**-1.5), "A4": (t, 2 * t**-1.5)}
        a = emit_plot(series, tmp_path / "a.svg").path.read_bytes()
        b = emit_plot(series, tmp_path / "b.svg").path.read_bytes()
        assert a == b

    def test_short_series_has_no_fit(self, tmp_path):
        result = emit_plot(([1.0, 2.0], [1.0, 0.5]), tmp_path / "short.svg")
        assert result.slope is None
        assert result.path.exists()

    def test_empty_series(self, tmp_path):
        with pytest.raises(DomainError):
            emit_plot(([], []), tmp_path / "empty.svg")

    def test_slope_label(self):
        assert slope_label(-1.5) == "−1.50"
        assert slope_label(2.0) == "2.00"


class TestRunLedger:
    def test_runs_and_checks(self, tmp_path):
        ledger = RunLedgerDB(str(tmp_path / "db" / "ledger.db"))
        run_id = ledger.start_run("verify-all", {"checks": ["ttstar"]})
        ledger.save_check(run_id, "ttstar", 4.0, 4.0, True, "k1")
        ledger.save_check(run_id, "poincare_oracle", 0.1, 0.05, False)
        ledger.finish_run(run_id, 2)

        runs = ledger.get_runs()
        assert runs[0]["id"] == run_id
        assert runs[0]["exit_code"] == 2
        assert json.loads(runs[0]["config"]) == {"checks": ["ttstar"]}

        checks = ledger.get_checks()
        assert [c["name"] for c in checks] == ["poincare_oracle", "ttstar"]
        assert checks[0]["passed"] is False
        assert ledger.get_checks("ttstar")[0]["passed"] is True

    def test_ledger_persists(self, tmp_path):
        path = str(tmp_path / "ledger.db")
        RunLedgerDB(path).start_run("lie")
        assert RunLedgerDB(path).get_runs()[0]["command"] == "lie"
