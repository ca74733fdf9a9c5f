"""Command line entry points for the figure renderers.

Exit status: 0 on success, 2 for bad input (schema mismatch, empty file,
unusable arguments), 3 when the filesystem refuses a read or write.
"""

from __future__ import annotations

import argparse
import sys

from .figures import PlotError, PlotSpec, render_alpha_bias, render_convergence


def _run(render, spec_args) -> int:
    try:
        spec = PlotSpec(**spec_args)
        out = render(spec)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


def main_converge(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-converge",
        description="Plot value against extent for every curve in the input sweeps.",
    )
    parser.add_argument("--csv", nargs="+", required=True, metavar="PATH",
                        help="sweep CSV files, one curve per (method, s, alpha)")
    parser.add_argument("--ref", type=float, default=None,
                        help="draw a horizontal reference line at this value")
    parser.add_argument("--out", required=True, help="output image (.svg or .png)")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    return _run(
        render_convergence,
        {
            "inputs": tuple(args.csv),
            "out": args.out,
            "reference": args.ref,
            "title": args.title,
        },
    )


def main_alpha(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-alpha",
        description="Plot |bias| against alpha on log-log axes.",
    )
    parser.add_argument("--csv", required=True, metavar="PATH",
                        help="CSV with alpha and bias columns")
    parser.add_argument("--out", required=True, help="output image (.svg or .png)")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    return _run(
        render_alpha_bias,
        {"inputs": (args.csv,), "out": args.out, "title": args.title},
    )


if __name__ == "__main__":
    sys.exit(main_converge())
