"""Command-line entry point: experiments in, CSV/JSON plus a run manifest out.

Option precedence is flags > config file (JSON, via --config) > defaults.
Every run writes exactly one manifest.json recording the command line,
resolved parameters, seed, code version, timestamps, and SHA-256 digests of
the emitted files. Floating output uses 17 significant digits in verification
artifacts and 10 in bulk traces. Exit codes: 0 success, 1 verification
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings
from datetime import datetime, timezone

import numpy as np

from . import __version__, dynamics, free_energy, mixing, paths, phase, verify
from .coupling import run_coupling
from .model import ModelParams, config_from_spins, lattice_count_vectors, uniform_prob
from .rng import RngSpec


class UsageError(Exception):
    pass


def _g(x: float, digits: int) -> str:
    return format(float(x), f".{digits}g")


def _write_text(path: str, text: str) -> str:
    with open(path, "w") as f:
        f.write(text)
    return path


def _write_csv(path: str, header: list[str], rows: list[list[str]]) -> str:
    lines = [",".join(header)] + [",".join(r) for r in rows]
    return _write_text(path, "\n".join(lines) + "\n")


def _write_json(path: str, obj) -> str:
    return _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        h.update(f.read())
    return h.hexdigest()


def _write_manifest(out_dir, command, argv, params, seed, outputs, started, finished):
    manifest = {
        "command": command,
        "argv": list(argv),
        "parameters": params,
        "seed": seed,
        "code_version": __version__,
        "started_at": started,
        "finished_at": finished,
        "outputs": [{"path": os.path.basename(p), "sha256": _sha256(p)} for p in outputs],
    }
    return _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _resolve(args: argparse.Namespace, defaults: dict):
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            cfg = json.load(f)
    vals = {}
    for key, default in defaults.items():
        v = getattr(args, key, None)
        if v is None:
            v = cfg.get(key, default)
        vals[key] = v
    missing = [k for k, v in vals.items() if v is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")
    return vals


def _out_dir(args) -> str:
    d = getattr(args, "out_dir", None) or os.environ.get("POTTS_OUT_DIR") or "."
    os.makedirs(d, exist_ok=True)
    return d


def _parse_n_list(text) -> list[int]:
    if isinstance(text, list):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x]


def _initial_state(params: ModelParams, spec: str, rng: RngSpec) -> dynamics.ChainState:
    if spec == "uniform":
        return dynamics.ChainState.random_uniform(params, rng)
    if spec.startswith("ordered:"):
        return dynamics.ChainState.ordered(params, int(spec.split(":", 1)[1]))
    with open(spec) as f:
        data = json.load(f)
    cfg = config_from_spins(data["left"], data["right"], params.q)
    return dynamics.ChainState.from_config(params, cfg)


# --- subcommands ---


def cmd_phase(args) -> tuple[list[str], dict]:
    vals = _resolve(
        args,
        {
            "q": None,
            "beta": "",
            "grid_step": 0.02,
            "beta_min": 0.5,
            "beta_max": 4.0,
            "beta_step": 0.05,
        },
    )
    q = int(vals["q"])
    out = _out_dir(args)
    written = []
    info = {
        "q": q,
        "beta_c": phase.beta_critical(q),
        "beta_s": phase.beta_mixing(q),
    }
    beta = None if vals["beta"] == "" else float(vals["beta"])
    if beta is not None:
        point = phase.macrostates(beta, q)
        info.update(
            beta=beta,
            s=point.s,
            regime=point.regime,
            macrostates=[list(m.weights) for m in point.macrostates],
        )
    written.append(_write_json(os.path.join(out, "phase.json"), info))

    if args.landscape:
        if beta is None:
            raise UsageError("--landscape requires --beta")
        m = int(round(1.0 / float(vals["grid_step"])))
        pts = lattice_count_vectors(q, m) / m
        sup_a = phase.sup_alpha(q, beta)
        rows = []
        for g in pts:
            a = free_energy.alpha(beta, g, g)
            rows.append([_g(x, 17) for x in g] + [_g(a, 17), _g(max(sup_a - a, 0.0), 17)])
        header = [f"gamma_{k+1}" for k in range(q)] + ["alpha", "rate"]
        written.append(_write_csv(os.path.join(out, "landscape.csv"), header, rows))

    if args.sweep:
        rows = []
        rho = uniform_prob(q)
        for b in np.arange(float(vals["beta_min"]), float(vals["beta_max"]) + 1e-12, float(vals["beta_step"])):
            point = phase.macrostates(float(b), q)
            a_rho = free_energy.alpha_diag(float(b), rho)
            a_nu = free_energy.alpha_diag(float(b), phase.phi(point.s, q))
            rows.append(
                [_g(b, 17), _g(point.s, 17), _g(a_rho, 17), _g(a_nu, 17), point.regime]
            )
        written.append(
            _write_csv(
                os.path.join(out, "sweep.csv"),
                ["beta", "s", "alpha_rho", "alpha_nu", "regime"],
                rows,
            )
        )
    return written, {"q": q, "beta": beta}


def cmd_simulate(args) -> tuple[list[str], dict]:
    vals = _resolve(
        args,
        {
            "q": None,
            "n": None,
            "beta": None,
            "steps": None,
            "record_every": 1,
            "seed": 0,
            "init": "uniform",
        },
    )
    params = ModelParams(q=int(vals["q"]), n=int(vals["n"]), beta=float(vals["beta"]))
    rng = RngSpec(seed=int(vals["seed"]))
    state = _initial_state(params, str(vals["init"]), rng)
    offsets, rec = dynamics.run_counts(state, int(vals["steps"]), int(vals["record_every"]), rng)
    q, n = params.q, params.n
    header = ["step"] + [f"left_{k+1}" for k in range(q)] + [f"right_{k+1}" for k in range(q)]
    rows = [
        [str(int(off))] + [_g(c / n, 10) for c in rec[i]]
        for i, off in enumerate(offsets)
    ]
    out = _out_dir(args)
    written = [_write_csv(os.path.join(out, "trajectory.csv"), header, rows)]
    return written, {**vals, "q": params.q, "n": params.n, "beta": params.beta}


def cmd_couple(args) -> tuple[list[str], dict]:
    vals = _resolve(
        args,
        {
            "q": None,
            "n": None,
            "beta": None,
            "replicas": 1,
            "t_max": None,
            "seed": 0,
            "init_x": "ordered:0",
            "init_y": "ordered:1",
            "trace_every": 0,
        },
    )
    params = ModelParams(q=int(vals["q"]), n=int(vals["n"]), beta=float(vals["beta"]))
    seed = int(vals["seed"])
    stride = int(vals["trace_every"])
    results = []
    trace_rows = []
    for r in range(int(vals["replicas"])):
        rng = RngSpec(seed=seed, stream=r)
        x0 = _initial_state(params, str(vals["init_x"]), rng)
        y0 = _initial_state(params, str(vals["init_y"]), rng)
        coupling_run = run_coupling(x0, y0, int(vals["t_max"]), rng, trace_stride=stride)
        results.append(
            {
                "stream": r,
                "coupling_time": coupling_run.coupling_time,
                "timed_out": coupling_run.timed_out,
            }
        )
        if stride > 0:
            for i, d in enumerate(coupling_run.trace):
                trace_rows.append([str(r), str(i * stride), str(int(d))])
    out = _out_dir(args)
    written = [
        _write_json(
            os.path.join(out, "coupling.json"),
            {"params": {"q": params.q, "n": params.n, "beta": params.beta}, "replicas": results},
        )
    ]
    if stride > 0:
        written.append(
            _write_csv(os.path.join(out, "traces.csv"), ["replica", "step", "distance"], trace_rows)
        )
    return written, {**vals, "beta": params.beta}


def cmd_paths(args) -> tuple[list[str], dict]:
    vals = _resolve(
        args,
        {"q": None, "beta": None, "samples": 0, "grid_step": 0.0, "seed": 0},
    )
    q = int(vals["q"])
    beta = float(vals["beta"])
    rho = uniform_prob(q)
    starts = []
    if int(vals["samples"]) > 0:
        gen = np.random.default_rng(int(vals["seed"]))
        for _ in range(int(vals["samples"])):
            starts.append((gen.dirichlet(np.ones(q)), gen.dirichlet(np.ones(q))))
    elif float(vals["grid_step"]) > 0:
        m = int(round(1.0 / float(vals["grid_step"])))
        for g in lattice_count_vectors(q, m) / m:
            starts.append((g, g))
    else:
        raise UsageError("paths requires --samples or --grid-step")
    rows = []
    from .model import ProbVector

    for sl, sr in starts:
        try:
            ratio = paths.contraction_ratio(
                (ProbVector(sl), ProbVector(sr)), (rho, rho), beta
            )
        except ValueError:
            continue  # start coincides with the end
        rows.append(
            [_g(x, 17) for x in sl]
            + [_g(x, 17) for x in sr]
            + [_g(1.0 / q, 17)] * (2 * q)
            + [_g(ratio, 17)]
        )
    header = (
        [f"start_left_{k+1}" for k in range(q)]
        + [f"start_right_{k+1}" for k in range(q)]
        + [f"end_left_{k+1}" for k in range(q)]
        + [f"end_right_{k+1}" for k in range(q)]
        + ["ratio"]
    )
    out = _out_dir(args)
    written = [_write_csv(os.path.join(out, "ratios.csv"), header, rows)]
    return written, vals


def cmd_mix(args) -> tuple[list[str], dict]:
    mode = args.mode
    out = _out_dir(args)
    if mode == "exact":
        vals = _resolve(args, {"q": None, "n": None, "beta": None, "t_max": 200})
        params = ModelParams(q=int(vals["q"]), n=int(vals["n"]), beta=float(vals["beta"]))
        curve = mixing.exact_tv_curve(params, int(vals["t_max"]))
        rows = [[str(int(t)), _g(d, 17)] for t, d in zip(curve.times, curve.distances)]
        written = [_write_csv(os.path.join(out, "tv_curve.csv"), ["t", "d_t"], rows)]
        return written, vals
    if mode == "scaling":
        vals = _resolve(
            args,
            {
                "q": None,
                "beta": None,
                "n_list": "64,128,256,512",
                "replicas": 200,
                "seed": 0,
                "t_max_factor": 200.0,
                "threads": 1,
            },
        )
        fit = mixing.coupling_time_scaling(
            int(vals["q"]),
            float(vals["beta"]),
            _parse_n_list(vals["n_list"]),
            int(vals["replicas"]),
            int(vals["seed"]),
            t_max_factor=float(vals["t_max_factor"]),
            threads=int(vals["threads"]),
        )
        rows = [
            [str(int(n)), _g(m, 17), _g(e, 17)]
            for n, m, e in zip(fit.n_values, fit.mean_coupling_times, fit.stderrs)
        ]
        written = [
            _write_csv(os.path.join(out, "scaling.csv"), ["n", "mean_tc", "stderr"], rows),
            _write_json(
                os.path.join(out, "scaling_fit.json"),
                {
                    "slope": fit.slope_a,
                    "r2": fit.r_squared,
                    "timeouts": fit.timeouts.tolist(),
                    "n_values": fit.n_values.tolist(),
                },
            ),
        ]
        return written, vals
    if mode == "slow":
        vals = _resolve(
            args,
            {
                "q": None,
                "beta": None,
                "n_list": "64,128,256",
                "replicas": 20,
                "seed": 0,
                "t_max_factor": 2000.0,
                "radius": "",
                "threads": 1,
            },
        )
        radius = None if vals["radius"] == "" else float(vals["radius"])
        table = mixing.slow_mixing_probe(
            int(vals["q"]),
            float(vals["beta"]),
            _parse_n_list(vals["n_list"]),
            int(vals["replicas"]),
            int(vals["seed"]),
            t_max_factor=float(vals["t_max_factor"]),
            radius=radius,
            threads=int(vals["threads"]),
        )
        rows = [
            [str(int(n)), _g(m, 17), _g(e, 17), str(int(c)), str(int(t))]
            for n, m, e, c, t in zip(
                table.n_values, table.mean_times, table.stderrs, table.censored, table.t_maxes
            )
        ]
        written = [
            _write_csv(
                os.path.join(out, "escape.csv"),
                ["n", "mean_escape", "stderr", "censored", "t_max"],
                rows,
            )
        ]
        return written, vals
    raise UsageError(f"unknown mix mode {mode!r}")


def cmd_verify(args) -> tuple[list[str], dict]:
    vals = _resolve(args, {"suite": "all"})
    report = verify.verify_suite(str(vals["suite"]))
    out = _out_dir(args)
    written = [_write_json(os.path.join(out, "report.json"), report)]
    for c in report["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"[{status}] {c['name']}: measured={c['measured']:.3g} tolerance={c['tolerance']:.3g}")
    if not report["passed"]:
        raise VerificationFailure(written, vals)
    return written, vals


class VerificationFailure(Exception):
    def __init__(self, written, vals):
        self.written = written
        self.vals = vals


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bipotts", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--config")
        sp.add_argument("--threads", type=int)

    sp = sub.add_parser("phase", help="critical points, macrostates, landscapes")
    common(sp)
    sp.add_argument("--q", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--landscape", action="store_true")
    sp.add_argument("--sweep", action="store_true")
    sp.add_argument("--grid-step", dest="grid_step", type=float)
    sp.add_argument("--beta-min", dest="beta_min", type=float)
    sp.add_argument("--beta-max", dest="beta_max", type=float)
    sp.add_argument("--beta-step", dest="beta_step", type=float)
    sp.set_defaults(fn=cmd_phase)

    sp = sub.add_parser("simulate", help="run one chain, record magnetizations")
    common(sp)
    sp.add_argument("--q", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--record-every", dest="record_every", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--init")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("couple", help="greedy coupling replicas")
    common(sp)
    sp.add_argument("--q", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--t-max", dest="t_max", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--init-x", dest="init_x")
    sp.add_argument("--init-y", dest="init_y")
    sp.add_argument("--trace-every", dest="trace_every", type=int)
    sp.set_defaults(fn=cmd_couple)

    sp = sub.add_parser("paths", help="contraction-ratio maps")
    common(sp)
    sp.add_argument("--q", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--grid-step", dest="grid_step", type=float)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(fn=cmd_paths)

    sp = sub.add_parser("mix", help="mixing-time measurements")
    common(sp)
    sp.add_argument("mode", choices=["exact", "scaling", "slow"])
    sp.add_argument("--q", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--t-max", dest="t_max", type=int)
    sp.add_argument("--n-list", dest="n_list")
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--t-max-factor", dest="t_max_factor", type=float)
    sp.add_argument("--radius")
    sp.set_defaults(fn=cmd_mix)

    sp = sub.add_parser("verify", help="oracle cross-check suites")
    common(sp)
    sp.add_argument("--suite", choices=list(verify.SUITES) + ["all"])
    sp.set_defaults(fn=cmd_verify)

    return p


def dispatch(argv: list[str]) -> int:
    """Run one subcommand; returns the process exit code (0 ok, 1 failed checks, 2 usage)."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    started = _now()
    try:
        written, params = args.fn(args)
        failed = False
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except VerificationFailure as vf:
        written, params = vf.written, vf.vals
        failed = True
    out = _out_dir(args)
    seed = params.get("seed")
    _write_manifest(
        out, args.command, argv, params, seed, written, started, _now()
    )
    return 1 if failed else 0


def main() -> None:
    warnings.filterwarnings("default")
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
