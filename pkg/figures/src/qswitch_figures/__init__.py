"""Figure rendering for the gate simulator's CSV artifacts.

This package is deliberately decoupled from the simulator: it reads the
CSV files that ``qswitch reproduce-all`` writes and knows nothing about
how they were produced.  The column names in those files are the whole
interface.
"""

from .render import (
    FigureError,
    FigureSpec,
    MissingColumnError,
    load_csv,
    render,
    render_sweep,
    render_trace,
)

__all__ = [
    "FigureError",
    "FigureSpec",
    "MissingColumnError",
    "load_csv",
    "render",
    "render_sweep",
    "render_trace",
]
