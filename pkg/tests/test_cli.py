"""End-to-end tests of the command-line interface (in-process)."""

import json
import os

import numpy as np
import pytest

from expanal import relative_errors, signal_from_json, signal_to_json
from expanal.cli import main

from cases import BIVARIATE_5, QUADVARIATE_9, signal_from_poles


@pytest.fixture()
def spec_file(tmp_path):
    path = tmp_path / "signal.json"
    path.write_text(json.dumps(signal_to_json(BIVARIATE_5.signal, BIVARIATE_5.P)))
    return str(path)


def run(*argv):
    return main(list(argv))


class TestGenerate:
    def test_sparse_lines(self, spec_file, tmp_path):
        out = str(tmp_path / "grid.json")
        code = run("generate", spec_file, "--N", "15", "--coverage", "sparse:7",
                   "--out", out)
        assert code == 0
        obj = json.loads(open(out).read())
        assert obj["coverage"] == "sparse:7"
        # 79 samples counted per line; the origin and the two points where
        # the diagonal crosses the axes are stored once each
        assert len(obj["entries"]) == 76

    def test_degenerate_signal(self, tmp_path):
        sig = signal_from_poles(np.array([[1.0 + 0.0j, 0.4 + 0.5j]]),
                                np.array([1.0 + 0j]), 1.0)
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(signal_to_json(sig, 1.0)))
        code = run("generate", str(path), "--N", "5", "--coverage", "full",
                   "--out", str(tmp_path / "x.json"))
        assert code == 2

    def test_parse_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code = run("generate", str(path), "--N", "5", "--coverage", "full",
                   "--out", str(tmp_path / "x.json"))
        assert code == 1

    def test_period_override(self, spec_file, tmp_path):
        out = str(tmp_path / "grid.json")
        assert run("generate", spec_file, "--P", "3.0", "--N", "6",
                   "--coverage", "full", "--out", out) == 0
        assert json.loads(open(out).read())["P"] == 3.0

    def test_full_grid_count(self, tmp_path):
        path = tmp_path / "sig4.json"
        path.write_text(
            json.dumps(signal_to_json(QUADVARIATE_9.signal, QUADVARIATE_9.P))
        )
        out = str(tmp_path / "grid4.json")
        assert run("generate", str(path), "--N", "10", "--coverage", "full",
                   "--out", out) == 0
        obj = json.loads(open(out).read())
        assert len(obj["entries"]) == 21 ** 4


class TestRecover:
    def test_sparse_roundtrip(self, spec_file, tmp_path):
        grid = str(tmp_path / "grid.json")
        result = str(tmp_path / "result.json")
        run("generate", spec_file, "--N", "15", "--coverage", "sparse:7",
            "--out", grid)
        code = run("recover", grid, "--method", "sparse", "--truth", spec_file,
                   "--out", result)
        assert code == 0
        payload = json.loads(open(result).read())
        assert payload["method"] == "sparse"
        assert payload["errors"]["e_frequency"] <= 1e-8
        assert payload["diagnostics"]["pairing"]["permutations"][0] is not None
        assert payload["wall_time"] > 0

    def test_result_reparses_to_signal(self, spec_file, tmp_path):
        grid = str(tmp_path / "grid.json")
        result = str(tmp_path / "result.json")
        run("generate", spec_file, "--N", "15", "--coverage", "sparse:7",
            "--out", grid)
        run("recover", grid, "--method", "sparse", "--truth", spec_file,
            "--out", result)
        payload = json.loads(open(result).read())
        recovered, _ = signal_from_json(payload["recovered"])
        report = relative_errors(BIVARIATE_5.signal, recovered, seed=0)
        assert report.signal_error == payload["errors"]["e_signal"]

    def test_recursive_roundtrip(self, spec_file, tmp_path):
        grid = str(tmp_path / "grid.json")
        result = str(tmp_path / "result.json")
        run("generate", spec_file, "--N", "8", "--coverage", "full", "--out", grid)
        code = run("recover", grid, "--method", "recursive", "--truth", spec_file,
                   "--out", result)
        assert code == 0
        payload = json.loads(open(result).read())
        assert payload["errors"]["e_frequency"] <= 1e-8
        assert len(payload["diagnostics"]["pole_tree"]["roots"]) == 5

    def test_coverage_mismatch(self, spec_file, tmp_path):
        grid = str(tmp_path / "grid.json")
        run("generate", spec_file, "--N", "6", "--coverage", "full", "--out", grid)
        code = run("recover", grid, "--method", "sparse",
                   "--out", str(tmp_path / "r.json"))
        assert code == 4

    def test_tau_contradiction(self, spec_file, tmp_path):
        grid = str(tmp_path / "grid.json")
        run("generate", spec_file, "--N", "15", "--coverage", "sparse:7",
            "--out", grid)
        code = run("recover", grid, "--method", "sparse", "--tau", "5",
                   "--out", str(tmp_path / "r.json"))
        assert code == 4

    def test_recovery_failure_payload(self, tmp_path):
        # a valid signal sampled with a shift too small for it: recovery
        # must fail with the error name in the payload
        sig = signal_from_poles(np.array([[2.5 + 0.5j, 0.3 + 0.8j]]),
                                np.array([1.0 + 0.5j]), 2.0)
        spec = tmp_path / "sig.json"
        spec.write_text(json.dumps(signal_to_json(sig, 2.0)))
        grid = str(tmp_path / "grid.json")
        run("generate", str(spec), "--N", "8", "--coverage", "sparse:2",
            "--out", grid)
        result = str(tmp_path / "r.json")
        code = run("recover", grid, "--method", "sparse", "--out", result)
        assert code == 3
        payload = json.loads(open(result).read())
        assert payload["error"] == "TauViolation"


class TestCompare:
    def test_identical(self, spec_file, capsys):
        assert run("compare", spec_file, spec_file) == 0
        out = capsys.readouterr().out
        assert "0.0000e+00" in out

    def test_permuted_rows(self, spec_file, tmp_path, capsys):
        sig = BIVARIATE_5.signal
        perm = [4, 2, 0, 1, 3]
        from expanal import ExponentialSum

        shuffled = ExponentialSum(sig.frequencies[perm], sig.coefficients[perm])
        other = tmp_path / "perm.json"
        other.write_text(json.dumps(signal_to_json(shuffled, BIVARIATE_5.P)))
        assert run("compare", spec_file, str(other)) == 0
        line = capsys.readouterr().out.splitlines()[1]
        assert line.split()[:2] == ["0.0000e+00", "0.0000e+00"]

    def test_parse_error(self, spec_file, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("[")
        assert run("compare", spec_file, str(bad)) == 1

    def test_json_report(self, spec_file, tmp_path):
        out = str(tmp_path / "report.json")
        assert run("compare", spec_file, spec_file, "--json", out) == 0
        report = json.loads(open(out).read())
        assert report["e_frequency"] == 0.0


class TestPlotGrid:
    def test_bivariate_count(self, tmp_path):
        out = str(tmp_path / "grid.csv")
        assert run("plot-grid", "--d", "2", "--N", "15", "--tau", "7",
                   "--out", out) == 0
        lines = open(out).read().strip().splitlines()
        assert lines[0] == "k1,k2,category"
        assert len(lines) - 1 == 79

    def test_trivariate_groups(self, tmp_path):
        out = str(tmp_path / "grid.csv")
        assert run("plot-grid", "--d", "3", "--N", "15", "--tau", "4",
                   "--out", out) == 0
        lines = open(out).read().strip().splitlines()[1:]
        axis_rows = [l for l in lines if l.endswith(",axis")]
        diag_rows = [l for l in lines if l.endswith(",diagonal")]
        assert len(axis_rows) == 3 * 31
        assert len(diag_rows) == 2 * (31 - 8)

    def test_bad_parameters(self, tmp_path):
        assert run("plot-grid", "--d", "2", "--N", "5", "--tau", "5",
                   "--out", str(tmp_path / "x.csv")) == 1


class TestDeterminism:
    def test_generate_bytes(self, spec_file, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        run("generate", spec_file, "--N", "10", "--coverage", "sparse:4", "--out", a)
        run("generate", spec_file, "--N", "10", "--coverage", "sparse:4", "--out", b)
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_recover_bytes_modulo_wall_time(self, spec_file, tmp_path):
        grid = str(tmp_path / "grid.json")
        run("generate", spec_file, "--N", "15", "--coverage", "sparse:7",
            "--out", grid)
        outs = []
        for name in ("r1.json", "r2.json"):
            path = str(tmp_path / name)
            run("recover", grid, "--method", "sparse", "--truth", spec_file,
                "--out", path)
            payload = json.loads(open(path).read())
            payload["wall_time"] = None
            outs.append(json.dumps(payload, sort_keys=True))
        assert outs[0] == outs[1]

    def test_compare_bytes(self, spec_file, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        run("compare", spec_file, spec_file, "--json", a)
        run("compare", spec_file, spec_file, "--json", b)
        assert open(a, "rb").read() == open(b, "rb").read()


def test_thread_cap_applied(monkeypatch, tmp_path):
    monkeypatch.setenv("EXPANAL_THREADS", "2")
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    run("plot-grid", "--d", "2", "--N", "6", "--tau", "2",
        "--out", str(tmp_path / "g.csv"))
    assert os.environ["OMP_NUM_THREADS"] == "2"
