import hashlib
import json
import math
import os

import jsonschema
import numpy as np
import pytest

from bipotts import cli, dynamics, verify
from bipotts.model import ProbVector


def run_cli(args, out_dir):
    return cli.dispatch(args + ["--out-dir", str(out_dir)])


def read(path):
    with open(path) as f:
        return f.read()


class TestDispatch:
    def test_phase_defaults(self, tmp_path):
        assert run_cli(["phase", "--q", "3"], tmp_path) == 0
        info = json.loads(read(tmp_path / "phase.json"))
        assert info["beta_c"] == pytest.approx(2.772588722239781, abs=1e-12)
        assert info["beta_s"] < info["beta_c"]

    def test_missing_required_is_usage_error(self, tmp_path):
        assert run_cli(["phase"], tmp_path) == 2

    def test_unknown_flag_is_usage_error(self, tmp_path):
        assert run_cli(["phase", "--q", "3", "--frobnicate"], tmp_path) == 2

    def test_unknown_subcommand(self, tmp_path):
        assert run_cli(["transmogrify"], tmp_path) == 2


class TestManifest:
    def test_digests_match_outputs(self, tmp_path):
        assert run_cli(
            ["simulate", "--q", "3", "--n", "8", "--beta", "1.0", "--steps", "50",
             "--record-every", "10", "--seed", "4"],
            tmp_path,
        ) == 0
        manifest = json.loads(read(tmp_path / "manifest.json"))
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 4
        assert len(manifest["outputs"]) == 1
        for entry in manifest["outputs"]:
            digest = hashlib.sha256((tmp_path / entry["path"]).read_bytes()).hexdigest()
            assert digest == entry["sha256"]

    def test_determinism_byte_identical(self, tmp_path):
        args = ["simulate", "--q", "3", "--n", "16", "--beta", "1.3", "--steps", "500",
                "--record-every", "25", "--seed", "9"]
        d1 = tmp_path / "a"
        d2 = tmp_path / "b"
        assert run_cli(args, d1) == 0
        assert run_cli(args, d2) == 0
        assert read(d1 / "trajectory.csv") == read(d2 / "trajectory.csv")
        m1 = json.loads(read(d1 / "manifest.json"))
        m2 = json.loads(read(d2 / "manifest.json"))
        assert m1["outputs"] == m2["outputs"]


class TestSimulate:
    def test_csv_schema(self, tmp_path):
        assert run_cli(
            ["simulate", "--q", "3", "--n", "10", "--beta", "0.5", "--steps", "100",
             "--record-every", "50", "--seed", "0"],
            tmp_path,
        ) == 0
        lines = read(tmp_path / "trajectory.csv").strip().splitlines()
        assert lines[0] == "step,left_1,left_2,left_3,right_1,right_2,right_3"
        assert len(lines) == 1 + 3  # header + records at steps 0, 50, 100
        row = lines[1].split(",")
        assert row[0] == "0"
        assert abs(sum(float(x) for x in row[1:4]) - 1.0) < 1e-9

    def test_ordered_init(self, tmp_path):
        assert run_cli(
            ["simulate", "--q", "3", "--n", "6", "--beta", "1.0", "--steps", "0",
             "--seed", "0", "--init", "ordered:2"],
            tmp_path,
        ) == 0
        row = read(tmp_path / "trajectory.csv").strip().splitlines()[1].split(",")
        assert float(row[3]) == 1.0  # left_3

    def test_custom_file_init(self, tmp_path):
        init = {"left": [0, 1, 2, 0], "right": [2, 2, 1, 0]}
        init_path = tmp_path / "init.json"
        init_path.write_text(json.dumps(init))
        assert run_cli(
            ["simulate", "--q", "3", "--n", "4", "--beta", "1.0", "--steps", "0",
             "--seed", "0", "--init", str(init_path)],
            tmp_path,
        ) == 0
        row = read(tmp_path / "trajectory.csv").strip().splitlines()[1].split(",")
        assert [float(x) for x in row[1:4]] == [0.5, 0.25, 0.25]


class TestCouple:
    def test_json_and_traces(self, tmp_path):
        assert run_cli(
            ["couple", "--q", "3", "--n", "12", "--beta", "1.0", "--replicas", "3",
             "--t-max", "50000", "--seed", "2", "--trace-every", "100"],
            tmp_path,
        ) == 0
        data = json.loads(read(tmp_path / "coupling.json"))
        assert len(data["replicas"]) == 3
        for rep in data["replicas"]:
            assert rep["timed_out"] is False
            assert rep["coupling_time"] >= 0
        lines = read(tmp_path / "traces.csv").strip().splitlines()
        assert lines[0] == "replica,step,distance"


class TestPhaseOutputs:
    def test_landscape_csv(self, tmp_path):
        assert run_cli(
            ["phase", "--q", "3", "--beta", "2.9", "--landscape", "--grid-step", "0.1"],
            tmp_path,
        ) == 0
        lines = read(tmp_path / "landscape.csv").strip().splitlines()
        assert lines[0] == "gamma_1,gamma_2,gamma_3,alpha,rate"
        assert len(lines) == 1 + math.comb(10 + 2, 2)
        rates = [float(l.split(",")[-1]) for l in lines[1:]]
        assert min(rates) >= 0.0

    def test_sweep_csv(self, tmp_path):
        assert run_cli(
            ["phase", "--q", "3", "--sweep", "--beta-min", "2.0", "--beta-max", "3.0",
             "--beta-step", "0.5"],
            tmp_path,
        ) == 0
        lines = read(tmp_path / "sweep.csv").strip().splitlines()
        assert lines[0] == "beta,s,alpha_rho,alpha_nu,regime"
        assert lines[1].endswith("subcritical")
        assert lines[-1].endswith("supercritical")


class TestPaths:
    def test_samples_csv(self, tmp_path):
        assert run_cli(
            ["paths", "--q", "3", "--beta", "2.0", "--samples", "5", "--seed", "1"],
            tmp_path,
        ) == 0
        lines = read(tmp_path / "ratios.csv").strip().splitlines()
        assert len(lines) == 6
        assert lines[0].split(",")[-1] == "ratio"


class TestMix:
    def test_exact_csv(self, tmp_path):
        assert run_cli(
            ["mix", "exact", "--q", "3", "--n", "3", "--beta", "1.0", "--t-max", "30"],
            tmp_path,
        ) == 0
        lines = read(tmp_path / "tv_curve.csv").strip().splitlines()
        assert lines[0] == "t,d_t"
        d = [float(l.split(",")[1]) for l in lines[1:]]
        assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))

    def test_scaling_outputs(self, tmp_path):
        assert run_cli(
            ["mix", "scaling", "--q", "3", "--beta", "0.5", "--n-list", "16,32",
             "--replicas", "10", "--seed", "3"],
            tmp_path,
        ) == 0
        fit = json.loads(read(tmp_path / "scaling_fit.json"))
        assert fit["slope"] > 0
        lines = read(tmp_path / "scaling.csv").strip().splitlines()
        assert lines[0] == "n,mean_tc,stderr"

    def test_slow_outputs(self, tmp_path):
        assert run_cli(
            ["mix", "slow", "--q", "3", "--beta", "3.3", "--n-list", "16",
             "--replicas", "4", "--seed", "5", "--t-max-factor", "50"],
            tmp_path,
        ) == 0
        lines = read(tmp_path / "escape.csv").strip().splitlines()
        assert lines[0] == "n,mean_escape,stderr,censored,t_max"


class TestConfigPrecedence:
    def test_flags_beat_config_beats_defaults(self, tmp_path):
        cfg = {"q": 4, "beta": 2.0}
        cfg_path = tmp_path / "conf.json"
        cfg_path.write_text(json.dumps(cfg))
        # flag --q 3 overrides config's q=4; beta comes from the config
        assert cli.dispatch(
            ["phase", "--q", "3", "--config", str(cfg_path), "--out-dir", str(tmp_path)]
        ) == 0
        info = json.loads(read(tmp_path / "phase.json"))
        assert info["q"] == 3
        assert info["beta"] == 2.0

    def test_env_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("POTTS_OUT_DIR", str(tmp_path / "envout"))
        assert cli.dispatch(["phase", "--q", "3"]) == 0
        assert (tmp_path / "envout" / "phase.json").exists()


class TestVerify:
    def test_report_schema_and_exit(self, tmp_path, capsys):
        assert run_cli(["verify", "--suite", "duality"], tmp_path) == 0
        report = json.loads(read(tmp_path / "report.json"))
        jsonschema.validate(report, verify.REPORT_SCHEMA)
        out = capsys.readouterr().out
        assert "[PASS]" in out

    def test_path_audit_suite(self, tmp_path):
        assert run_cli(["verify", "--suite", "path-audit"], tmp_path) == 0

    def test_injected_fault_fails_kernel_exactness(self, tmp_path, monkeypatch):
        true_g = dynamics.g_map

        def negated(z, beta):
            return true_g(z, -beta)

        monkeypatch.setattr(dynamics, "g_map", negated)
        code = run_cli(["verify", "--suite", "kernel-exactness"], tmp_path)
        assert code == 1
        report = json.loads(read(tmp_path / "report.json"))
        assert report["passed"] is False
