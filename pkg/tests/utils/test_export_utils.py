# -*- coding: utf-8 -*-
"""
Tests for the Wigner export helpers.

Covers:
- CSV layout and bit-identical re-import
- Manifest contents
- PNG rendering
- Malformed tables and unwritable paths
- JSON writer
"""

import json

import numpy as np
import pandas as pd
import pytest

from modwigner.exceptions import DomainError, ExportError
from modwigner.models.lattice import ModularGrid
from modwigner.utils.export_utils import CSV_COLUMNS, export_wigner, read_wigner_csv, wigner_frame, write_json

from tests.factories import IntegerWavefunctionFactory


@pytest.fixture
def surface(wigner_service, lattice):
    iw = IntegerWavefunctionFactory(nmax=2, mmax=1)
    return wigner_service.wigner_full(iw, 2, 1, grid=ModularGrid(lattice, 8, 6))


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

class TestCsv:

    def test_frame_layout(self, surface):
        frame = wigner_frame(surface)
        assert list(frame.columns) == CSV_COLUMNS
        assert len(frame) == 5 * 3 * 8 * 6
        # C order of W[n, m, j, k]: k varies fastest
        assert frame["n"].iloc[0] == -2 and frame["m"].iloc[0] == -1
        assert frame["pbar"].iloc[1] > frame["pbar"].iloc[0]
        np.testing.assert_array_equal(frame["W"].to_numpy(), surface.values.ravel())

    def test_reimport_is_bit_identical(self, surface, tmp_path):
        files = export_wigner(surface, tmp_path / "w.csv", state="random")
        back = read_wigner_csv(files["csv"])
        assert (back.nmax, back.mmax) == (2, 1)
        assert back.lattice.l == surface.lattice.l
        np.testing.assert_array_equal(back.grid.xbar, surface.grid.xbar)
        np.testing.assert_array_equal(back.values, surface.values)

    def test_wrong_columns_raise(self, tmp_path):
        path = tmp_path / "bad.csv"
        pd.DataFrame({"n": [0], "m": [0], "x": [0.0], "p": [0.0], "W": [0.1]}).to_csv(path, index=False)
        with pytest.raises(DomainError):
            read_wigner_csv(path)

    def test_incomplete_table_raises(self, surface, tmp_path):
        path = tmp_path / "short.csv"
        wigner_frame(surface).iloc[:-1].to_csv(path, index=False)
        with pytest.raises(DomainError):
            read_wigner_csv(path)

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(ExportError) as exc:
            read_wigner_csv(tmp_path / "absent.csv")
        assert exc.value.details["path"].endswith("absent.csv")


# ---------------------------------------------------------------------------
# Manifest and plot
# ---------------------------------------------------------------------------

class TestManifest:

    def test_manifest_next_to_csv(self, surface, tmp_path):
        files = export_wigner(surface, tmp_path / "out" / "w.csv", state="random", config={"seed": 3})
        assert files["manifest"] == str(tmp_path / "out" / "w.json")
        manifest = json.loads((tmp_path / "out" / "w.json").read_text(encoding="utf-8"))
        assert manifest["state"] == "random"
        assert (manifest["nmax"], manifest["mmax"], manifest["size_x"], manifest["size_p"]) == (2, 1, 8, 6)
        assert manifest["separable"] == surface.is_separable
        assert manifest["normalization"] == pytest.approx(1.0, abs=1e-8)
        assert manifest["files"]["csv"] == files["csv"]
        assert manifest["config"] == {"seed": 3}
        assert manifest["generated_at"]

    def test_png(self, surface, tmp_path):
        files = export_wigner(surface, tmp_path / "w.csv", png_path=tmp_path / "w.png")
        with open(files["png"], "rb") as handle:
            assert handle.read(8) == b"\x89PNG\r\n\x1a\n"
        manifest = json.loads((tmp_path / "w.json").read_text(encoding="utf-8"))
        assert manifest["files"]["png"] == files["png"]

    def test_unwritable_target_raises(self, surface, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("not a directory", encoding="utf-8")
        with pytest.raises(ExportError):
            export_wigner(surface, blocker / "w.csv")

    def test_json_writer_creates_parents(self, tmp_path):
        path = write_json(tmp_path / "a" / "b" / "report.json", {"rounds": 2, "p": 0.0})
        assert json.loads(path.read_text(encoding="utf-8")) == {"p": 0.0, "rounds": 2}

    def test_json_writer_wraps_os_errors(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")
        with pytest.raises(ExportError) as exc:
            write_json(blocker / "report.json", {})
        assert exc.value.details["path"].endswith("report.json")
