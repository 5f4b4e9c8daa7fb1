"""Shared plumbing: CSV loading with schema checks, the figure spec, dispatch."""

from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import numpy as np

ANNOTATION_TOL = 1e-9


class SchemaError(ValueError):
    """Input file does not match the producing subcommand's schema."""


def load_csv(path: str, required: list[str]) -> dict[str, np.ndarray]:
    """Read a CSV into named float columns, failing fast on missing columns."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: missing column(s) {', '.join(missing)}; found {', '.join(header)}"
        )
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    cols: dict[str, np.ndarray] = {}
    for name in required:
        idx = header.index(name)
        try:
            cols[name] = np.array([float(r[idx]) for r in rows])
        except (ValueError, IndexError) as e:
            raise SchemaError(f"{path}: column {name!r} is not numeric: {e}") from None
    return cols


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input file(s), figure kind, output path, styling."""

    kind: str  # landscape | tv-curve | scaling | contraction | escape
    inputs: tuple[str, ...]
    output: str
    options: dict = field(default_factory=dict)


def save(fig, output: str) -> str:
    fig.savefig(output, dpi=150, metadata={"Software": "potts-plots"})
    import matplotlib.pyplot as plt

    plt.close(fig)
    return output


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path. Idempotent for identical inputs."""
    from . import contraction, escape, landscape, scaling, tv_curve

    kinds = {
        "landscape": landscape.render_landscape,
        "tv-curve": tv_curve.render_tv_curve,
        "scaling": scaling.render_scaling,
        "contraction": contraction.render_contraction,
        "escape": escape.render_escape,
    }
    if spec.kind not in kinds:
        raise ValueError(f"unknown figure kind {spec.kind!r}; choose from {sorted(kinds)}")
    return kinds[spec.kind](spec)


def standard_parser(description: str, n_inputs: int = 1) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    if n_inputs == 1:
        p.add_argument("--input", required=True)
    else:
        for i in range(n_inputs):
            p.add_argument(f"--input{'' if i == 0 else i + 1}", required=True)
    p.add_argument("--output", required=True)
    return p


def ternary_xy(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric coordinates on the 3-simplex to 2-d plot coordinates."""
    x = weights[:, 1] + 0.5 * weights[:, 2]
    y = (np.sqrt(3) / 2) * weights[:, 2]
    return x, y
