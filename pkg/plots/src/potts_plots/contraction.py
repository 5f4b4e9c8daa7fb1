"""Contraction-ratio map: left start coordinates on the ternary simplex,
colored by the aggregate-variation ratio toward the endpoint.

Input: `paths` CSV (start/end coordinates plus ratio), q = 3.
"""

from __future__ import annotations

import matplotlib.pyplot as plt
import numpy as np

from .common import FigureSpec, SchemaError, load_csv, save, standard_parser, ternary_xy

COLUMNS = [
    "start_left_1",
    "start_left_2",
    "start_left_3",
    "ratio",
]


def render_contraction(spec: FigureSpec) -> str:
    cols = load_csv(spec.inputs[0], COLUMNS)
    weights = np.column_stack(
        [cols["start_left_1"], cols["start_left_2"], cols["start_left_3"]]
    )
    if np.abs(weights.sum(axis=1) - 1.0).max() > 1e-9:
        raise SchemaError(f"{spec.inputs[0]}: start_left columns do not sum to 1")
    ratio = cols["ratio"]
    x, y = ternary_xy(weights)

    fig, ax = plt.subplots(figsize=(7, 6.2))
    sc = ax.scatter(x, y, c=ratio, s=22, cmap="coolwarm", vmin=0.0,
                    vmax=max(1.2, float(ratio.max())))
    fig.colorbar(sc, ax=ax, label="aggregate variation / endpoint distance")
    rx, ry = ternary_xy(np.full((1, 3), 1 / 3))
    ax.plot(rx, ry, "k+", markersize=12, label="uniform")
    corners = np.eye(3)
    cx, cy = ternary_xy(corners)
    ax.plot(np.append(cx, cx[0]), np.append(cy, cy[0]), "k-", lw=0.8)
    ax.set_aspect("equal")
    ax.set_axis_off()
    frac = float((ratio < 1.0).mean())
    ax.set_title(
        spec.options.get("title", f"contraction ratios (fraction < 1: {frac:.2f})")
    )
    ax.legend(loc="upper right")
    return save(fig, spec.output)


def main() -> None:
    p = standard_parser("Contraction-ratio map over the simplex")
    p.add_argument("--title", default=None)
    a = p.parse_args()
    opts = {"title": a.title} if a.title else {}
    render_contraction(FigureSpec("contraction", (a.input,), a.output, opts))


if __name__ == "__main__":
    main()
