"""Command line front end for figure rendering.

Examples, starting from a ``qswitch reproduce-all`` output directory::

    qswitch-figures --csv out/fig2.csv --kind trace --out figs/fig2
    qswitch-figures --csv out/fig3a.csv --kind sweep-semilog \\
        --y p_out --out figs/fig3a
    qswitch-figures --csv out/fig3b.csv --kind sweep-loglog \\
        --y infidelity --overlay kappa_over_omega_q_sq --out figs/fig3b
    qswitch-figures --csv out/fig3c.csv --kind sweep-semilog \\
        --y f_gamma_q --y f_gamma_e --y f_both --out figs/fig3c

Each invocation writes ``<out>.png`` and ``<out>.svg`` and prints the
paths it wrote.  Exit status is 0 on success, 1 for bad input data or
options, 3 for filesystem errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureError, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qswitch-figures",
        description="Render simulator CSV artifacts into figure panels.",
    )
    parser.add_argument(
        "--csv", required=True, type=Path, help="input CSV file"
    )
    parser.add_argument(
        "--kind", required=True, choices=KINDS, help="figure layout"
    )
    parser.add_argument(
        "--out",
        required=True,
        type=Path,
        help="output path base; .png and .svg are written next to it",
    )
    parser.add_argument(
        "--x", default=None, help="sweep axis column (default: first column)"
    )
    parser.add_argument(
        "--y",
        action="append",
        default=None,
        metavar="COLUMN",
        help="result column to plot; repeat for several series "
        "(default: every non-axis column)",
    )
    parser.add_argument(
        "--overlay",
        default=None,
        metavar="COLUMN",
        help="column drawn as a solid reference curve",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec_kwargs = {
        "csv": args.csv,
        "kind": args.kind,
        "out": args.out,
        "x": args.x,
        "y": tuple(args.y or ()),
        "overlay": args.overlay,
    }
    try:
        written = render(FigureSpec(**spec_kwargs))
    except FigureError as exc:
        print("figure error: %s" % exc, file=sys.stderr)
        return 1
    except OSError as exc:
        print("i/o error: %s" % exc, file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
