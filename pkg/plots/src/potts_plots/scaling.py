"""Coupling-time scaling: means against n log n with the fitted line.

Inputs: `mix scaling` CSV (n, mean_tc, stderr) and its fit JSON (slope, r2).
The slope and R^2 are recomputed here from the CSV and must agree with the
JSON within 1e-9; anything else means the two files drifted apart.
"""

from __future__ import annotations

import json

import matplotlib.pyplot as plt
import numpy as np

from .common import ANNOTATION_TOL, FigureSpec, SchemaError, load_csv, save, standard_parser

COLUMNS = ["n", "mean_tc", "stderr"]


def refit(n: np.ndarray, mean: np.ndarray) -> tuple[float, float]:
    x = n * np.log(n)
    slope = float((x @ mean) / (x @ x))
    ss_res = float(np.sum((mean - slope * x) ** 2))
    ss_tot = float(np.sum((mean - mean.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return slope, r2


def render_scaling(spec: FigureSpec) -> str:
    cols = load_csv(spec.inputs[0], COLUMNS)
    with open(spec.inputs[1]) as f:
        fit = json.load(f)
    for key in ("slope", "r2"):
        if key not in fit:
            raise SchemaError(f"{spec.inputs[1]}: missing key {key!r}")

    n, mean, err = cols["n"], cols["mean_tc"], cols["stderr"]
    slope, r2 = refit(n, mean)
    if abs(slope - fit["slope"]) > ANNOTATION_TOL * max(1.0, abs(slope)):
        raise SchemaError(
            f"recomputed slope {slope!r} disagrees with {spec.inputs[1]} ({fit['slope']!r})"
        )
    if abs(r2 - fit["r2"]) > ANNOTATION_TOL:
        raise SchemaError(f"recomputed R^2 {r2!r} disagrees with {spec.inputs[1]} ({fit['r2']!r})")

    x = n * np.log(n)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(x, mean, yerr=err, fmt="o", capsize=3, label="mean coupling time")
    grid = np.linspace(0, x.max() * 1.05, 50)
    ax.plot(grid, slope * grid, "-", lw=1.2, label=f"fit {slope:.3f} · n log n,  R² = {r2:.4f}")
    ax.set_xlabel("n log n")
    ax.set_ylabel("mean coupling time (steps)")
    ax.legend()
    ax.set_title(spec.options.get("title", "coupling-time scaling"))
    return save(fig, spec.output)


def main() -> None:
    p = standard_parser("Coupling-time scaling with fitted line", n_inputs=2)
    p.add_argument("--title", default=None)
    a = p.parse_args()
    opts = {"title": a.title} if a.title else {}
    render_scaling(FigureSpec("scaling", (a.input, a.input2), a.output, opts))


if __name__ == "__main__":
    main()
