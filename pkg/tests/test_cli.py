from __future__ import annotations

import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from skewtorsion import __version__
from skewtorsion.cli import REPORT_SCHEMA, catalog_list, main, run_verify

FIXTURES = Path(__file__).parent / "fixtures"


def _strip_times(obj):
    if isinstance(obj, dict):
        return {k: _strip_times(v) for k, v in obj.items() if k != "wall_time_s"}
    if isinstance(obj, list):
        return [_strip_times(v) for v in obj]
    return obj


def _write(tmp_path, cfg) -> Path:
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def _iter_checks(report):
    for s in report["systems"]:
        yield from s.get("checks", [])
        for c in s["classified"]:
            yield from c["checks"]


class TestCatalogCommand:
    def test_rows(self, capsys):
        assert main(["catalog"]) == 0
        out = capsys.readouterr().out
        assert "so | n≥2 | n | n(n−1)/2" in out.splitlines()
        assert "quaternionic | n≥2 | 4n | 3+n(2n+1)" in out.splitlines()
        assert len(out.splitlines()) - 1 >= 6

    def test_function_returns_text(self, capsys):
        text = catalog_list()
        assert text == capsys.readouterr().out


class TestVerify:
    def test_adjoint_so5(self, tmp_path):
        out = tmp_path / "r.json"
        assert run_verify(FIXTURES / "adjoint_so5.json", out, quiet=True) == 0
        report = json.loads(out.read_text())
        assert report["schema"] == REPORT_SCHEMA
        assert report["version"] == __version__
        assert report["tolerance"] == {"rel": 1e-9, "abs": 1e-9}
        assert report["seed"] == 0
        (system,) = report["systems"]
        (c,) = system["classified"]
        assert c["verdict"] == "symmetric_adjoint"
        assert c["evidence"]["rank"] == 2

    def test_quaternionic_solve(self, tmp_path):
        out = tmp_path / "r.json"
        assert run_verify(FIXTURES / "quaternionic2_solve.json", out, quiet=True) == 0
        (system,) = json.loads(out.read_text())["systems"]
        assert system["form_space_dim"] == 0
        assert system["classified"] == []

    def test_whole_catalog(self, tmp_path):
        out = tmp_path / "r.json"
        assert run_verify(FIXTURES / "catalog_all.json", out, quiet=True) == 0
        report = json.loads(out.read_text())
        assert report["summary"]["inconsistent"] == 0

    def test_residuals_finite_and_tagged(self, tmp_path):
        out = tmp_path / "r.json"
        run_verify(FIXTURES / "catalog_all.json", out, quiet=True)
        checks = list(_iter_checks(json.loads(out.read_text())))
        assert checks
        for c in checks:
            assert c["op"]
            assert isinstance(c["residual"], float) and math.isfinite(c["residual"])
            assert isinstance(c["passed"], bool)

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run_verify(FIXTURES / "catalog_all.json", a, quiet=True)
        run_verify(FIXTURES / "catalog_all.json", b, quiet=True)
        assert _strip_times(json.loads(a.read_text())) == _strip_times(json.loads(b.read_text()))

    def test_json_stdout(self, capsys):
        assert main(["verify", str(FIXTURES / "adjoint_so5.json"), "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["schema"] == REPORT_SCHEMA

    def test_flag_overrides(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["verify", str(FIXTURES / "adjoint_so5.json"), "-o", str(out), "--tol", "1e-8", "--seed", "3", "--samples", "4", "--quiet"]) == 0
        report = json.loads(out.read_text())
        assert report["tolerance"] == {"rel": 1e-8, "abs": 1e-8}
        assert report["seed"] == 3 and report["samples"] == 4


class TestExitCodes:
    def test_check_failure(self, tmp_path):
        out = tmp_path / "r.json"
        assert run_verify(FIXTURES / "expect_mismatch.json", out, quiet=True) == 2
        failed = [c for c in _iter_checks(json.loads(out.read_text())) if not c["passed"]]
        assert [c["name"] for c in failed] == ["expect_branch"]

    def test_inconclusive(self, tmp_path):
        out = tmp_path / "r.json"
        assert run_verify(FIXTURES / "tiny_theta.json", out, quiet=True) == 3
        assert json.loads(out.read_text())["summary"]["exit_code"] == 3

    def test_unknown_name(self, capsys):
        assert run_verify(FIXTURES / "unknown_name.json", quiet=True) == 4
        err = capsys.readouterr().err
        assert "systems[0].algebra.catalog" in err and "'sl'" in err

    def test_missing_file(self, tmp_path, capsys):
        assert run_verify(tmp_path / "nope.json") == 4
        assert "cannot read config" in capsys.readouterr().err

    def test_bad_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert run_verify(p) == 4
        assert "not valid JSON" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "cfg,field",
        [
            ({"systems": [{"algebra": "so 3"}]}, "'theta'"),
            ({"schema": "other/9", "systems": []}, "schema"),
            ({"systems": [{"algebra": "so 3", "theta": "solve", "colour": 1}]}, "unknown fields"),
            ({"systems": [{"algebra": {"catalog": "so"}, "theta": "solve"}]}, "'parameter'"),
            ({"systems": [{"algebra": {"catalog": "so", "parameter": 1}, "theta": "solve"}]}, "parameter"),
            ({"systems": [{"algebra": "su 3", "theta": "adjoint"}]}, "theta"),
            ({"systems": [{"algebra": {"matrices": [[[0, 1], [1, 0]]]}, "dimension": 2, "theta": "solve"}]}, "matrices"),
            ({"systems": [{"algebra": "so 3", "theta": {"entries": [[0, 1, 3, 1.0]]}}]}, "entries"),
            ({"tolerance": {"rel": -1}, "systems": []}, "tolerance"),
        ],
    )
    def test_schema_violations(self, tmp_path, capsys, cfg, field):
        assert run_verify(_write(tmp_path, cfg)) == 4
        assert field in capsys.readouterr().err

    def test_explicit_theta_outside_algebra(self, tmp_path, capsys):
        cfg = {"systems": [{"algebra": {"matrices": [[[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]]},
                            "dimension": 4, "theta": {"entries": [[0, 1, 2, 1.0]]}}]}
        assert run_verify(_write(tmp_path, cfg)) == 4
        assert "systems[0].theta" in capsys.readouterr().err


class TestSubprocess:
    def test_module_entry_point_ignores_stdin(self, tmp_path):
        out = tmp_path / "r.json"
        proc = subprocess.run(
            [sys.executable, "-m", "skewtorsion", "verify", str(FIXTURES / "adjoint_so5.json"), "-o", str(out), "--quiet"],
            stdin=subprocess.DEVNULL, capture_output=True, text=True, timeout=60,
        )
        assert proc.returncode == 0, proc.stderr
        assert json.loads(out.read_text())["summary"]["exit_code"] == 0
