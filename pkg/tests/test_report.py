"""Delimited output, canonical JSON, and figure rendering."""
import json
import os

import numpy as np
import pytest

from mbm_lab.config import parse_config
from mbm_lab.errors import DomainError
from mbm_lab.harness import ExperimentReport, StatResult
from mbm_lab.report import (
    REPORT_VERSION,
    read_json,
    render_curve_figure,
    render_report_figures,
    report_payload,
    write_csv,
    write_json,
    write_report,
)


def small_config():
    return parse_config({
        "version": "mbm-lab/1",
        "seed": 5,
        "hurst": {"kind": "constant", "value": 0.5},
        "grid": {"t0": 0.0, "dt": 0.01, "n": 11},
    })


def small_report():
    res = StatResult(
        name="occupation-identity",
        verdict="pass",
        summary={"max_relative_error": 1.5e-14, "tolerance": 1e-12},
        curves={"occupation-identity": (
            "table", ["replica", "max_rel_err"], [(0, 1.5e-14), (1, 3.0e-15)])},
    )
    return ExperimentReport(config=small_config(), results=[res])


class TestCsv:
    def test_crlf_header_and_rows(self, tmp_path):
        p = tmp_path / "c.csv"
        write_csv(p, ["a", "b"], [(1, 2.5), (3, 0.1)])
        raw = p.read_bytes()
        assert raw == b"a,b\r\n1,2.5\r\n3,0.1\r\n"

    def test_minimal_quoting(self, tmp_path):
        p = tmp_path / "q.csv"
        write_csv(p, ["label", "v"], [("plain", 1), ("with,comma", 2),
                                      ('say "hi"', 3)])
        raw = p.read_bytes().decode("utf-8")
        lines = raw.split("\r\n")
        assert lines[1] == "plain,1"
        assert lines[2] == '"with,comma",2'
        assert lines[3] == '"say ""hi""",3'

    def test_cell_formats(self, tmp_path):
        p = tmp_path / "f.csv"
        third = 1.0 / 3.0
        write_csv(p, ["v"], [(True,), (False,), (np.bool_(True),),
                             (np.int64(7),), (np.float64(third),),
                             (float("inf"),), ("text",)])
        body = p.read_bytes().decode("utf-8").split("\r\n")[1:-1]
        assert body == ["true", "false", "true", "7",
                        repr(third), "inf", "text"]

    def test_float_cells_round_trip(self, tmp_path):
        values = [0.1, 1e-300, 123456789.123456789, 2.0 ** -52]
        p = tmp_path / "r.csv"
        write_csv(p, ["x"], [(v,) for v in values])
        body = p.read_bytes().decode("utf-8").split("\r\n")[1:-1]
        assert [float(cell) for cell in body] == values


class TestJson:
    def test_canonical_form(self, tmp_path):
        p = tmp_path / "o.json"
        write_json(p, {"zeta": 1, "alpha": {"b": 2, "a": 3}})
        text = p.read_text(encoding="utf-8")
        assert text == ('{\n  "alpha": {\n    "a": 3,\n    "b": 2\n  },\n'
                        '  "zeta": 1\n}\n')

    def test_numpy_and_tuple_payloads(self, tmp_path):
        p = tmp_path / "n.json"
        write_json(p, {"i": np.int32(4), "f": np.float64(0.25),
                       "b": np.bool_(False), "arr": np.arange(3),
                       "tup": (1, 2)})
        data = read_json(p)
        assert data == {"i": 4, "f": 0.25, "b": False,
                        "arr": [0, 1, 2], "tup": [1, 2]}

    def test_unserializable_rejected(self, tmp_path):
        with pytest.raises(TypeError, match="not JSON serializable"):
            write_json(tmp_path / "bad.json", {"x": object()})

    def test_write_read_round_trip(self, tmp_path):
        payload = {"a": [1.5, None, "s"], "b": {"c": True}}
        p = tmp_path / "rt.json"
        write_json(p, payload)
        assert read_json(p) == payload


class TestReportFiles:
    def test_write_report_layout(self, tmp_path):
        report = small_report()
        path = write_report(report, tmp_path, elapsed=1.23)
        assert os.path.basename(path) == "report.json"
        payload = read_json(path)
        assert payload["version"] == REPORT_VERSION
        assert payload["exit_code"] == 0
        entry = payload["results"][0]
        assert entry["name"] == "occupation-identity"
        assert entry["verdict"] == "pass"
        curve = entry["curves"]["occupation-identity"]
        assert curve == {"file": "00-occupation-identity.csv", "kind": "table"}
        assert (tmp_path / "00-occupation-identity.csv").exists()
        assert payload["timing"]["elapsed_seconds"] == 1.23
        assert payload["config"] == report.config.to_dict()

    def test_byte_identity_modulo_timing(self, tmp_path):
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        write_report(small_report(), dir_a, elapsed=0.5)
        write_report(small_report(), dir_b, elapsed=7.5)
        csv_a = (dir_a / "00-occupation-identity.csv").read_bytes()
        csv_b = (dir_b / "00-occupation-identity.csv").read_bytes()
        assert csv_a == csv_b
        pa = read_json(dir_a / "report.json")
        pb = read_json(dir_b / "report.json")
        pa.pop("timing")
        pb.pop("timing")
        assert json.dumps(pa, sort_keys=True) == json.dumps(pb, sort_keys=True)

    def test_payload_includes_error_text(self):
        res = StatResult(name="chung-modulus", verdict="error",
                         error="Traceback ...\nDomainError: boom")
        payload = report_payload(
            ExperimentReport(config=small_config(), results=[res]), {}, 0.0)
        assert payload["exit_code"] == 1
        assert payload["results"][0]["error"].endswith("boom")


class TestFigures:
    def curve_csv(self, tmp_path, name, header, rows):
        p = tmp_path / name
        write_csv(p, header, rows)
        return str(p)

    @pytest.mark.parametrize("kind", ["modulus", "distance", "path",
                                      "profile", "table", "mystery"])
    def test_each_kind_renders_png(self, tmp_path, kind):
        if kind == "modulus":
            header = ["delta", "local", "uniform"]
            rows = [(10.0 ** -k, 1.0 + 0.1 * k, 1.5 + 0.1 * k)
                    for k in range(1, 5)]
        elif kind == "distance":
            header = ["rho", "energy_distance", "p_value"]
            rows = [(0.1, 0.015, 0.2), (0.03, 0.003, 0.5), (0.01, 0.0006, 0.9)]
        else:
            header = ["t", "value"]
            rows = [(0.1 * k, np.sin(0.1 * k)) for k in range(20)]
        csv_path = self.curve_csv(tmp_path, f"{kind}.csv", header, rows)
        png = str(tmp_path / f"{kind}.png")
        out = render_curve_figure(csv_path, kind, png, title=kind)
        assert out == png
        assert os.path.getsize(png) > 1000
        assert open(png, "rb").read(8) == b"\x89PNG\r\n\x1a\n"

    def test_non_numeric_column_tolerated(self, tmp_path):
        csv_path = self.curve_csv(tmp_path, "mixed.csv",
                                  ["label", "h", "value"],
                                  [("ma", 0.5, 1.0), ("hz", 0.5, 2.5)])
        png = str(tmp_path / "mixed.png")
        render_curve_figure(csv_path, "table", png)
        assert os.path.getsize(png) > 0

    def test_empty_curve_file_rejected(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_bytes(b"")
        with pytest.raises(DomainError, match="empty curve file"):
            render_curve_figure(str(p), "table", str(tmp_path / "e.png"))

    def test_render_report_figures_end_to_end(self, tmp_path):
        write_report(small_report(), tmp_path, elapsed=0.1)
        rendered = render_report_figures(tmp_path)
        assert rendered == [str(tmp_path / "00-occupation-identity.png")]
        assert os.path.exists(rendered[0])

    def test_render_simulation_manifests(self, tmp_path):
        write_csv(tmp_path / "replica-0000.csv", ["t", "value"],
                  [(0.0, 0.0), (0.5, 0.3), (1.0, -0.2)])
        write_json(tmp_path / "ensemble.json",
                   {"version": REPORT_VERSION, "files": ["replica-0000.csv"]})
        write_csv(tmp_path / "localtime-0000.csv", ["x", "local_time"],
                  [(-0.1, 0.2), (0.0, 1.1), (0.1, 0.4)])
        write_json(tmp_path / "localtime.json",
                   {"version": REPORT_VERSION, "files": ["localtime-0000.csv"]})
        rendered = render_report_figures(tmp_path)
        assert sorted(os.path.basename(p) for p in rendered) == [
            "localtime-0000.png", "replica-0000.png"]

    def test_missing_everything_renders_nothing(self, tmp_path):
        assert render_report_figures(tmp_path) == []
