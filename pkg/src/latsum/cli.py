"""Command-line entry point.

Subcommands:

* ``energy``      one Ewald or continued-zeta energy, printed as a single line
* ``converge``    sweep sphere/cube/wolf/wolf_damped over an extent grid, CSV out
* ``sweep-alpha`` damped-limit bias against Ewald over a list of alphas, CSV out
* ``zeta``        continued cell energy at a general exponent s
* ``check``       built-in verification suites, one check per line

Exit codes: 0 success, 1 failed check suite, 2 invalid arguments or numeric
domain errors, 3 I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import sys

from .errors import ConfigError, LatsumError
from .harness import (
    CHECK_SUITES,
    SWEEP_METHODS,
    check_suite,
    config_from_dict,
    load_config,
    render_report,
    run,
)
from .trunc import CSV_HEADER
from .wolf import damped_bias


def _parse_grid(text: str):
    """`min:max:count` becomes a sampling triple, `a,b,c` explicit extents."""
    try:
        if ":" in text:
            lo, hi, count = text.split(":")
            return (float(lo), float(hi), int(count))
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}: {exc}") from exc


def _parse_alphas(text: str):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse alpha list {text!r}: {exc}") from exc


def _base_doc(args) -> dict:
    if args.config is not None:
        return load_config(args.config).to_dict()
    return {"preset": args.preset}


def _add_cell_source(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", help="named reference cell")
    group.add_argument("--config", help="JSON cell/run definition file")


def _add_serial(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--serial",
        action="store_true",
        help="force deterministic serial evaluation (the default and only mode)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latsum",
        description="Electrostatic lattice sums for neutral periodic point charges.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("energy", help="single energy value")
    _add_cell_source(p)
    p.add_argument("--method", choices=("ewald", "zeta"), default="ewald")
    p.add_argument("--s", type=float, default=1.0, help="exponent (zeta method)")
    p.add_argument("--alpha", type=float, help="Ewald splitting override")
    p.add_argument("--tol", type=float, default=1e-12, help="Ewald target tolerance")

    p = sub.add_parser("converge", help="convergence sweep to CSV")
    _add_cell_source(p)
    p.add_argument("--method", choices=SWEEP_METHODS, required=True)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--alpha", type=float, help="damping (wolf_damped only)")
    p.add_argument("--r", required=True, help="extent grid: min:max:count or comma list")
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    _add_serial(p)

    p = sub.add_parser("sweep-alpha", help="damped-limit bias vs alpha to CSV")
    _add_cell_source(p)
    p.add_argument("--alphas", required=True, help="comma-separated damping values")
    p.add_argument("--r", default="20:40:32", help="radius sweep design min:max:count")
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    _add_serial(p)

    p = sub.add_parser("zeta", help="continued cell energy at exponent s")
    _add_cell_source(p)
    p.add_argument("--s", type=float, required=True)

    p = sub.add_parser("check", help="run verification suites")
    p.add_argument("--suite", choices=CHECK_SUITES + ("all",), default="all")
    _add_serial(p)

    return parser


def _cmd_energy(args) -> int:
    doc = _base_doc(args)
    doc["method"] = args.method
    doc["s"] = args.s if args.method == "zeta" else 1.0
    if args.alpha is not None and args.method == "ewald":
        doc["alpha"] = args.alpha
    doc.pop("grid", None)
    doc.pop("out", None)
    return run(config_from_dict(doc), target_tol=args.tol)


def _cmd_converge(args) -> int:
    doc = _base_doc(args)
    doc["method"] = args.method
    doc["s"] = args.s
    if args.alpha is not None:
        doc["alpha"] = args.alpha
    else:
        doc.pop("alpha", None)
    grid = _parse_grid(args.r)
    doc["grid"] = {"min": grid[0], "max": grid[1], "count": grid[2]} if len(grid) == 3 and isinstance(grid[2], int) else list(grid)
    if args.out is not None:
        doc["out"] = args.out
    else:
        doc.pop("out", None)
    return run(config_from_dict(doc))


def _cmd_sweep_alpha(args) -> int:
    doc = _base_doc(args)
    config = config_from_dict({k: doc[k] for k in ("preset", "lattice", "sites") if k in doc})
    grid = _parse_grid(args.r)
    if not (len(grid) == 3 and isinstance(grid[2], int)):
        raise ConfigError("sweep-alpha needs --r min:max:count")
    lo, hi, count = grid
    alphas = _parse_alphas(args.alphas)

    rows = []
    for alpha in alphas:
        bias = damped_bias(config.cell, alpha, hi, r_min=lo, samples=count)
        rows.append(("damped_bias", "1", f"{alpha:.17g}", f"{hi:.17g}", f"{bias:.17g}", 0, 0))

    def _emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)

    if args.out is None:
        _emit(sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            _emit(fh)
    return 0


def _cmd_zeta(args) -> int:
    doc = _base_doc(args)
    doc["method"] = "zeta"
    doc["s"] = args.s
    doc.pop("alpha", None)
    doc.pop("grid", None)
    doc.pop("out", None)
    return run(config_from_dict(doc))


def _cmd_check(args) -> int:
    names = CHECK_SUITES if args.suite == "all" else (args.suite,)
    reports = [check_suite(name) for name in names]
    sys.stdout.write(render_report(reports))
    return 0 if all(r.overall for r in reports) else 1


_HANDLERS = {
    "energy": _cmd_energy,
    "converge": _cmd_converge,
    "sweep-alpha": _cmd_sweep_alpha,
    "zeta": _cmd_zeta,
    "check": _cmd_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (LatsumError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
