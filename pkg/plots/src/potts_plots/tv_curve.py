"""Total-variation decay curve on a log scale.

Input: `mix exact` CSV (t, d_t).
"""

from __future__ import annotations

import matplotlib.pyplot as plt
import numpy as np

from .common import FigureSpec, SchemaError, load_csv, save, standard_parser

COLUMNS = ["t", "d_t"]


def render_tv_curve(spec: FigureSpec) -> str:
    cols = load_csv(spec.inputs[0], COLUMNS)
    t, d = cols["t"], cols["d_t"]
    if np.any(np.diff(d) > 1e-12):
        raise SchemaError(f"{spec.inputs[0]}: d_t is not nonincreasing")

    fig, ax = plt.subplots(figsize=(7, 4.5))
    positive = d > 0
    ax.semilogy(t[positive], d[positive], "-", lw=1.5)
    ax.axhline(0.25, color="gray", ls="--", lw=0.8)
    hits = np.flatnonzero(d <= 0.25)
    if hits.size:
        tm = t[hits[0]]
        ax.axvline(tm, color="gray", ls="--", lw=0.8)
        ax.annotate(f"t_mix(1/4) = {int(tm)}", (tm, 0.25), textcoords="offset points",
                    xytext=(6, 6), fontsize=9)
    ax.set_xlabel("steps")
    ax.set_ylabel("worst-start TV distance")
    ax.set_title(spec.options.get("title", "projected-chain TV decay"))
    return save(fig, spec.output)


def main() -> None:
    p = standard_parser("TV decay curve on a log scale")
    p.add_argument("--title", default=None)
    a = p.parse_args()
    opts = {"title": a.title} if a.title else {}
    render_tv_curve(FigureSpec("tv-curve", (a.input,), a.output, opts))


if __name__ == "__main__":
    main()
