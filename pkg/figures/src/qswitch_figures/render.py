"""Render trajectory and sweep CSVs into figure panels.

Two layouts are supported.  A *trace* figure shows a single gate run:
the incoming pulse intensity, the storage-cavity population, and the
accumulated population of the odd output mode on top, with the qubit
detuning schedule below.  A *sweep* figure plots one or more result
columns against a swept parameter, on log-log or semilog-x axes, with
an optional solid reference curve taken from another column of the same
file.

Input files are never modified, and rendering the same CSV twice
produces byte-identical images, so figures can be regenerated freely
from archived run output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
# stable element ids so repeated renders of the same data are
# byte-identical, and labels kept as editable text rather than glyph
# outlines
matplotlib.rcParams["svg.hashsalt"] = "qswitch-figures"
matplotlib.rcParams["svg.fonttype"] = "none"

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("trace", "sweep-loglog", "sweep-semilog")

_DPI = 150


class FigureError(Exception):
    """Problem with figure input data or the requested layout."""


class MissingColumnError(FigureError):
    """A referenced column is absent from the CSV header."""

    def __init__(self, column: str, available: tuple[str, ...]):
        self.column = column
        super().__init__(
            "column %r not found in CSV (header has: %s)"
            % (column, ", ".join(available))
        )


def load_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    """Read a comma-separated table with a single header line.

    Returns the column names and a float array with one row per data
    line.  A file with no header or no data rows is rejected: there is
    nothing to plot.
    """
    path = Path(path)
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        body = fh.read()
    if not header:
        raise FigureError("%s is empty" % path)
    names = tuple(header.split(","))
    if not body.strip():
        raise FigureError("%s has a header but no data rows" % path)
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(names):
        raise FigureError(
            "%s: %d columns in header but %d in data"
            % (path, len(names), data.shape[1])
        )
    return names, data


def _column(names: tuple[str, ...], data: np.ndarray, name: str) -> np.ndarray:
    try:
        i = names.index(name)
    except ValueError:
        raise MissingColumnError(name, names) from None
    return data[:, i]


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render.

    ``out`` is a path base; ``.png`` and ``.svg`` siblings are written.
    For sweeps, ``x`` defaults to the first column and ``y`` to every
    remaining column except the overlay.  Every referenced column must
    exist in the CSV header; an unknown name raises
    :class:`MissingColumnError` before anything is drawn.
    """

    csv: Path
    kind: str
    out: Path
    x: str | None = None
    y: tuple[str, ...] = field(default_factory=tuple)
    overlay: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(
                "unknown figure kind %r (expected one of %s)"
                % (self.kind, ", ".join(KINDS))
            )
        object.__setattr__(self, "csv", Path(self.csv))
        object.__setattr__(self, "out", Path(self.out))


def render(spec: FigureSpec) -> list[Path]:
    """Render one spec and return the paths of the written images."""
    if spec.kind == "trace":
        return render_trace(spec.csv, spec.out)
    return render_sweep(
        spec.csv,
        spec.out,
        kind=spec.kind,
        x=spec.x,
        y=spec.y,
        overlay=spec.overlay,
    )


def _save(fig, out_base: Path) -> list[Path]:
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    png = out_base.with_suffix(".png")
    svg = out_base.with_suffix(".svg")
    fig.savefig(png, dpi=_DPI)
    # a None date keeps the file free of wall-clock metadata
    fig.savefig(svg, metadata={"Date": None})
    plt.close(fig)
    return [png, svg]


def _cumulative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Running trapezoid integral of ``y`` over ``t``, starting at 0."""
    if len(t) < 2:
        return np.zeros_like(y)
    steps = 0.5 * (y[1:] + y[:-1]) * np.diff(t)
    return np.concatenate(([0.0], np.cumsum(steps)))


def render_trace(csv_path: str | Path, out_base: str | Path) -> list[Path]:
    """Two-panel trace of a single gate run.

    Top: incoming pulse intensity, storage population in the ground
    branch, and the running integral of the odd output mode
    ``(f_out^f - f_out^g)/2``.  Bottom: the qubit detuning schedule.
    """
    names, data = load_csv(csv_path)
    t = _column(names, data, "t")
    fin = _column(names, data, "re_fin") + 1j * _column(names, data, "im_fin")
    ps_g = _column(names, data, "ps_g")
    fout_g = _column(names, data, "re_fout_g") + 1j * _column(
        names, data, "im_fout_g"
    )
    fout_f = _column(names, data, "re_fout_f") + 1j * _column(
        names, data, "im_fout_f"
    )
    delta_q = _column(names, data, "delta_q")

    f_minus = 0.5 * (fout_f - fout_g)
    out_minus = _cumulative(t, np.abs(f_minus) ** 2)

    fig, (ax_top, ax_bot) = plt.subplots(
        2,
        1,
        sharex=True,
        figsize=(6.4, 4.8),
        height_ratios=(2.2, 1.0),
        constrained_layout=True,
    )
    ax_top.plot(t, np.abs(fin) ** 2, color="C0", label=r"$|f_{\mathrm{in}}|^2$")
    ax_top.plot(t, ps_g, color="C1", label=r"$|C_s|^2$")
    ax_top.plot(
        t,
        out_minus,
        color="C2",
        label=r"$\int |f_{\mathrm{out}}^-|^2\,dt'$",
    )
    ax_top.set_ylabel("population / intensity")
    ax_top.legend(loc="center right", frameon=False)
    ax_top.grid(True, alpha=0.3)

    ax_bot.plot(t, delta_q, color="C3")
    ax_bot.set_xlabel(r"$t\,[1/\kappa]$")
    ax_bot.set_ylabel(r"$\Delta_q(t)\,[\kappa]$")
    ax_bot.grid(True, alpha=0.3)

    return _save(fig, Path(out_base))


def render_sweep(
    csv_path: str | Path,
    out_base: str | Path,
    *,
    kind: str = "sweep-loglog",
    x: str | None = None,
    y: tuple[str, ...] | list[str] = (),
    overlay: str | None = None,
) -> list[Path]:
    """Result columns against a swept parameter.

    Data series are drawn as open circles with a dashed guide line;
    the overlay column, if given, as a solid reference curve.  The
    semilog-x layout annotates the maximum of the first series at the
    grid point where the data attain it.
    """
    if kind not in ("sweep-loglog", "sweep-semilog"):
        raise FigureError(
            "unknown sweep kind %r (expected sweep-loglog or sweep-semilog)"
            % (kind,)
        )
    names, data = load_csv(csv_path)
    x_name = x if x is not None else names[0]
    xs = _column(names, data, x_name)
    y_names = tuple(y)
    if not y_names:
        y_names = tuple(
            n for n in names if n != x_name and n != overlay
        )
        if not y_names:
            raise FigureError("no result columns left to plot")

    fig, ax = plt.subplots(figsize=(5.2, 3.9), constrained_layout=True)
    for i, name in enumerate(y_names):
        ys = _column(names, data, name)
        color = "C%d" % (i % 10)
        ax.plot(
            xs,
            ys,
            linestyle="--",
            linewidth=0.9,
            marker="o",
            markerfacecolor="none",
            color=color,
            label=name,
        )
    if overlay is not None:
        ax.plot(
            xs,
            _column(names, data, overlay),
            linestyle="-",
            color="k",
            linewidth=1.2,
            label=overlay,
        )

    if kind == "sweep-loglog":
        ax.set_xscale("log")
        ax.set_yscale("log")
    else:
        ax.set_xscale("log")
        first = _column(names, data, y_names[0])
        # the log axis cannot place a marker at x <= 0, so sweeps that
        # include a zero grid point are annotated at the best positive one
        pos = xs > 0.0
        if pos.any():
            k = int(np.argmax(np.where(pos, first, -np.inf)))
            ax.annotate(
                "peak at %s = %.3g" % (x_name, xs[k]),
                xy=(xs[k], first[k]),
                xytext=(0.05, 0.78),
                textcoords="axes fraction",
                arrowprops={"arrowstyle": "->", "linewidth": 0.8},
                fontsize=9,
            )

    ax.set_xlabel(x_name)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(frameon=False, fontsize=9)

    return _save(fig, Path(out_base))
