import subprocess
import sys

import pytest


def run_primary(args, out_dir):
    """Invoke the simulation CLI (the external interface figures are fed from)."""
    res = subprocess.run(
        [sys.executable, "-m", "bipotts.cli", *args, "--out-dir", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    return out_dir


@pytest.fixture(scope="session")
def primary_outputs(tmp_path_factory):
    """Fresh CSV/JSON outputs from a full run of every producing subcommand."""
    base = tmp_path_factory.mktemp("primary")
    run_primary(
        ["phase", "--q", "3", "--beta", "2.9", "--landscape", "--grid-step", "0.02"],
        base / "phase",
    )
    run_primary(
        ["mix", "exact", "--q", "3", "--n", "4", "--beta", "1.0", "--t-max", "80"],
        base / "tv",
    )
    run_primary(
        ["mix", "scaling", "--q", "3", "--beta", "1.5", "--n-list", "16,32,64",
         "--replicas", "30", "--seed", "1"],
        base / "scaling",
    )
    run_primary(
        ["paths", "--q", "3", "--beta", "2.6", "--samples", "150", "--seed", "2"],
        base / "paths",
    )
    run_primary(
        ["mix", "slow", "--q", "3", "--beta", "3.3", "--n-list", "16,32",
         "--replicas", "5", "--seed", "3", "--t-max-factor", "60"],
        base / "slow",
    )
    return {
        "landscape": base / "phase" / "landscape.csv",
        "tv_curve": base / "tv" / "tv_curve.csv",
        "scaling": base / "scaling" / "scaling.csv",
        "scaling_fit": base / "scaling" / "scaling_fit.json",
        "ratios": base / "paths" / "ratios.csv",
        "escape": base / "slow" / "escape.csv",
    }
