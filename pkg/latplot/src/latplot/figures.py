"""Deterministic figures from lattice-sum sweep CSVs.

Rendering is batch-only (Agg backend) with a pinned hash salt, pinned
geometry and no timestamps in the output, so identical inputs produce
byte-identical image files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  backend must be pinned first

__all__ = [
    "SERIES_HEADER",
    "PlotError",
    "SchemaError",
    "PlotSpec",
    "read_series",
    "read_alpha_bias",
    "group_series",
    "render_convergence",
    "render_alpha_bias",
]

SERIES_HEADER = ("method", "s", "alpha", "extent", "value", "terms", "surface_terms")

# log-scale axes need a positive floor; exact zero biases clamp here
_BIAS_FLOOR = 1e-16

_RC = {
    "svg.hashsalt": "latplot",
    "svg.fonttype": "none",
    "figure.figsize": (6.4, 4.8),
    "figure.dpi": 100,
    "savefig.dpi": 100,
}


class PlotError(Exception):
    """Bad input; command line entry points map this to exit status 2."""


class SchemaError(PlotError):
    """CSV header or row content does not match the expected schema."""


@dataclass(frozen=True)
class PlotSpec:
    """What to read, what to draw over it, and where to write the image."""

    inputs: tuple
    out: str
    reference: float | None = None
    title: str = ""
    xlabel: str = "extent"
    ylabel: str = "value"

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        object.__setattr__(self, "out", str(self.out))
        if not self.inputs:
            raise PlotError("at least one input CSV is required")
        if Path(self.out).suffix.lower() not in (".svg", ".png"):
            raise PlotError(f"output must end in .svg or .png, got {self.out!r}")


def read_series(path) -> list[dict]:
    """Typed rows of one sweep CSV, validated against SERIES_HEADER."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if tuple(header) != SERIES_HEADER:
            raise SchemaError(
                f"{path}: header {','.join(header)!r} does not match "
                f"{','.join(SERIES_HEADER)!r}"
            )
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(SERIES_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected {len(SERIES_HEADER)} fields")
            try:
                rows.append(
                    {
                        "method": rec[0],
                        "s": float(rec[1]),
                        "alpha": None if rec[2] == "" else float(rec[2]),
                        "extent": float(rec[3]),
                        "value": float(rec[4]),
                    }
                )
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_alpha_bias(path) -> list[tuple[float, float]]:
    """(alpha, bias) pairs from a two-column CSV.

    Sweep files in the SERIES_HEADER schema are accepted too; there the bias
    sits in the value column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        records = list(reader)
    cols = {name: k for k, name in enumerate(header)}
    if "alpha" not in cols:
        raise SchemaError(f"{path}: missing alpha column")
    if "bias" in cols:
        value_col = cols["bias"]
    elif tuple(header) == SERIES_HEADER:
        value_col = cols["value"]
    else:
        raise SchemaError(f"{path}: need a bias column or the sweep schema")
    if not records:
        raise SchemaError(f"{path}: no data rows")
    pairs = []
    for lineno, rec in enumerate(records, start=2):
        try:
            pairs.append((float(rec[cols["alpha"]]), float(rec[value_col])))
        except (IndexError, ValueError) as exc:
            raise SchemaError(f"{path}:{lineno}: {exc}") from None
    return pairs


def group_series(rows) -> list[tuple[tuple, tuple[list, list]]]:
    """Split rows into curves keyed by (method, s, alpha), input order kept."""
    groups: dict = {}
    order = []
    for row in rows:
        key = (row["method"], row["s"], row["alpha"])
        if key not in groups:
            groups[key] = ([], [])
            order.append(key)
        groups[key][0].append(row["extent"])
        groups[key][1].append(row["value"])
    return [(key, groups[key]) for key in order]


def _curve_label(method: str, s: float, alpha: float | None) -> str:
    label = f"{method} s={s:g}"
    if alpha is not None:
        label += f" alpha={alpha:g}"
    return label


def _save(fig, out: str) -> None:
    if Path(out).suffix.lower() == ".svg":
        # a null Date keeps the XML free of the render timestamp
        fig.savefig(out, format="svg", metadata={"Date": None})
    else:
        fig.savefig(out, format="png", metadata={"Software": "latplot"})


def render_convergence(spec: PlotSpec) -> str:
    """One figure: a value-vs-extent curve per (method, s, alpha) group
    across all input CSVs, plus an optional horizontal reference line."""
    rows = []
    for path in spec.inputs:
        rows.extend(read_series(path))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        try:
            for (method, s, alpha), (xs, ys) in group_series(rows):
                ax.plot(
                    xs,
                    ys,
                    marker="o",
                    markersize=3.0,
                    linewidth=1.2,
                    label=_curve_label(method, s, alpha),
                )
            if spec.reference is not None:
                ax.axhline(
                    spec.reference,
                    color="black",
                    linestyle="--",
                    linewidth=1.0,
                    label="reference",
                )
            ax.set_xlabel(spec.xlabel)
            ax.set_ylabel(spec.ylabel)
            if spec.title:
                ax.set_title(spec.title)
            ax.grid(True, alpha=0.3)
            ax.legend(loc="best", fontsize=8)
            _save(fig, spec.out)
        finally:
            plt.close(fig)
    return spec.out


def render_alpha_bias(spec: PlotSpec) -> str:
    """|bias| against alpha on log-log axes, one curve per input CSV."""
    curves = [(Path(path).stem, read_alpha_bias(path)) for path in spec.inputs]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        try:
            for name, pairs in curves:
                xs = [alpha for alpha, _ in pairs]
                ys = [max(abs(bias), _BIAS_FLOOR) for _, bias in pairs]
                ax.plot(xs, ys, marker="o", markersize=3.0, linewidth=1.2, label=name)
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel(spec.xlabel if spec.xlabel != "extent" else "alpha")
            ax.set_ylabel(spec.ylabel if spec.ylabel != "value" else "|bias|")
            if spec.title:
                ax.set_title(spec.title)
            ax.grid(True, which="both", alpha=0.3)
            ax.legend(loc="best", fontsize=8)
            _save(fig, spec.out)
        finally:
            plt.close(fig)
    return spec.out
