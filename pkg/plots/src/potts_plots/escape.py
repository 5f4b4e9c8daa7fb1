"""Escape-time growth with system size, censored runs flagged.

Input: `mix slow` CSV (n, mean_escape, stderr, censored, t_max).
"""

from __future__ import annotations

import matplotlib.pyplot as plt
import numpy as np

from .common import FigureSpec, load_csv, save, standard_parser

COLUMNS = ["n", "mean_escape", "stderr", "censored", "t_max"]


def render_escape(spec: FigureSpec) -> str:
    cols = load_csv(spec.inputs[0], COLUMNS)
    n, mean, err = cols["n"], cols["mean_escape"], cols["stderr"]
    censored = cols["censored"].astype(int)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(n, mean, yerr=err, fmt="o-", capsize=3, label="mean escape time")
    # n log n reference anchored at the first point, for scale
    ref = mean[0] * (n * np.log(n)) / (n[0] * np.log(n[0]))
    ax.plot(n, ref, "--", color="gray", lw=1.0, label="n log n reference")
    for xi, yi, c in zip(n, mean, censored):
        if c > 0:
            ax.annotate(f"≥ ({c} censored)", (xi, yi), textcoords="offset points",
                        xytext=(6, -10), fontsize=8)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("steps to reach near-uniform magnetization")
    ax.legend()
    ax.set_title(spec.options.get("title", "metastable escape growth"))
    return save(fig, spec.output)


def main() -> None:
    p = standard_parser("Escape-time growth with system size")
    p.add_argument("--title", default=None)
    a = p.parse_args()
    opts = {"title": a.title} if a.title else {}
    render_escape(FigureSpec("escape", (a.input,), a.output, opts))


if __name__ == "__main__":
    main()
