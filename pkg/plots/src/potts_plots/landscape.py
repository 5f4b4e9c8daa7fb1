"""Ternary heat map of the diagonal score landscape, maxima marked.

Input: `phase --landscape` CSV (gamma_1..gamma_3, alpha, rate), q = 3.
"""

from __future__ import annotations

import matplotlib.pyplot as plt
import numpy as np

from .common import FigureSpec, SchemaError, load_csv, save, standard_parser, ternary_xy

COLUMNS = ["gamma_1", "gamma_2", "gamma_3", "alpha", "rate"]


def render_landscape(spec: FigureSpec) -> str:
    cols = load_csv(spec.inputs[0], COLUMNS)
    weights = np.column_stack([cols["gamma_1"], cols["gamma_2"], cols["gamma_3"]])
    if np.abs(weights.sum(axis=1) - 1.0).max() > 1e-9:
        raise SchemaError(f"{spec.inputs[0]}: gamma columns do not sum to 1")
    field = spec.options.get("field", "rate")
    if field not in ("alpha", "rate"):
        raise ValueError("field option must be 'alpha' or 'rate'")
    x, y = ternary_xy(weights)
    values = cols[field]

    fig, ax = plt.subplots(figsize=(7, 6.2))
    tri = ax.tripcolor(x, y, values, shading="gouraud", cmap="viridis")
    fig.colorbar(tri, ax=ax, label=field)

    # maxima of the score = zeros of the rate, up to the grid's resolution
    best = cols["rate"] <= cols["rate"].min() + 1e-12
    ax.plot(x[best], y[best], "r*", markersize=14, markeredgecolor="white", label="maxima")

    corners = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    cx, cy = ternary_xy(corners)
    ax.plot(np.append(cx, cx[0]), np.append(cy, cy[0]), "k-", lw=0.8)
    for label, px, py in zip(("spin 1", "spin 2", "spin 3"), cx, cy):
        ax.annotate(label, (px, py), textcoords="offset points", xytext=(0, -12 if py == 0 else 8),
                    ha="center", fontsize=9)
    ax.set_aspect("equal")
    ax.set_axis_off()
    ax.legend(loc="upper right")
    ax.set_title(spec.options.get("title", f"diagonal {field} landscape"))
    return save(fig, spec.output)


def main() -> None:
    p = standard_parser("Ternary heat map of the diagonal landscape (q=3)")
    p.add_argument("--field", choices=["alpha", "rate"], default="rate")
    p.add_argument("--title", default=None)
    a = p.parse_args()
    opts = {"field": a.field}
    if a.title:
        opts["title"] = a.title
    render_landscape(FigureSpec("landscape", (a.input,), a.output, opts))


if __name__ == "__main__":
    main()
