"""Non-interactive figure generation from bipotts CSV/JSON outputs.

Each figure kind is one script with --input/--output flags; scripts consume
only files (never the simulation binary), so figures are reproducible from
archived outputs. Any numeric annotation shown on a figure is recomputed from
the CSV and cross-checked against the simulation's own JSON; drift beyond
1e-9 is an error, not a silently different number.
"""

from .common import FigureSpec, SchemaError, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "SchemaError", "render", "__version__"]
