"""Truncated direct lattice sums over expanding spheres and cubes.

The cell energy at exponent s is a double sum over ordered site pairs and
lattice images.  Spherical truncation keeps images with radius below the
cutoff and weights images on the cutoff shell by 1/2; cube truncation keeps
whole index blocks n in [-M, M]^3 with no surface weighting.  Summation runs
in a deterministic order (shells sorted by radius, then lexicographic index)
with exact compensated accumulation, so serial results are reproducible
bit for bit.
"""

from __future__ import annotations

import csv
import io
from collections import OrderedDict
from dataclasses import dataclass
from math import floor, fsum, sqrt

import numpy as np

from .crystal import UnitCell
from .errors import ArgumentError

__all__ = [
    "TIE_EPS",
    "TruncationRegion",
    "SumResult",
    "SeriesPoint",
    "ConvergenceSeries",
    "psi",
    "enumerate_images",
    "truncated_sum",
    "naive_sphere_sum",
    "naive_cube_sum",
    "clear_of_shells",
    "convergence_series",
    "write_series_csv",
]

# relative half-width of the tie band around the truncation shell
TIE_EPS = 1e-9

CSV_HEADER = ("method", "s", "alpha", "extent", "value", "terms", "surface_terms")


@dataclass(frozen=True)
class TruncationRegion:
    """Truncation domain: shape is 'sphere' (extent = radius) or 'cube'
    (extent = integer index bound M)."""

    shape: str
    extent: float


@dataclass(frozen=True)
class SumResult:
    """Value and term bookkeeping of one truncated sum."""

    value: float
    terms: int
    surface_terms: int
    region: TruncationRegion
    s: float


@dataclass(frozen=True)
class SeriesPoint:
    extent: float
    value: float
    terms: int
    surface_terms: int


@dataclass(frozen=True)
class ConvergenceSeries:
    """Ordered (extent, value) samples of one estimator on one cell."""

    method: str
    s: float
    alpha: float | None
    points: tuple[SeriesPoint, ...]

    @property
    def extents(self) -> np.ndarray:
        return np.array([p.extent for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])


def psi(x: float) -> float:
    """Truncation weight: 0 below the shell, 1/2 on it, 1 above.

    The shell is the relative band |x - 1| <= TIE_EPS.
    """
    if not (x >= 0.0):
        raise ArgumentError(f"psi argument must be nonnegative, got {x!r}")
    if x < 1.0 - TIE_EPS:
        return 0.0
    if x <= 1.0 + TIE_EPS:
        return 0.5
    return 1.0


def _int_grid(bounds: np.ndarray) -> np.ndarray:
    """All integer vectors n with |n_k| <= bounds_k, lexicographic order."""
    axes = [np.arange(-int(b), int(b) + 1) for b in bounds]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return grid.reshape(-1, 3)


def enumerate_images(p, basis, R: float) -> np.ndarray:
    """Integer images n with |V(n+p)| <= R(1 + TIE_EPS), lexicographically sorted.

    Index bounds follow from the rows of the inverse matrix; the candidate box
    grows as R^3.
    """
    if not (R > 0 and np.isfinite(R)):
        raise ArgumentError(f"radius must be positive and finite, got {R!r}")
    p = np.asarray(p, dtype=float).reshape(3)
    row_norms = np.linalg.norm(basis.inverse, axis=1)
    bounds = np.ceil(R * (1 + TIE_EPS) * row_norms + np.abs(p)) + 1
    n = _int_grid(bounds)
    r = np.linalg.norm((n + p) @ basis.matrix.T, axis=1)
    return n[r <= R * (1 + TIE_EPS)]


def _offset_groups(cell: UnitCell) -> list[tuple[float, int, np.ndarray, bool]]:
    """Ordered site pairs grouped by wrapped fractional offset.

    Returns (coefficient, pair multiplicity, offset, exclude_origin) per group.
    The coefficient carries the 1/2 prefactor of the double sum; the diagonal
    group (zero offset, origin image excluded) comes first.
    """
    q = cell.charges
    diag = (0.5 * float(q @ q), cell.nsites, np.zeros(3), True)
    groups: "OrderedDict[tuple, list]" = OrderedDict()
    for i in range(cell.nsites):
        for j in range(cell.nsites):
            if i == j:
                continue
            d = cell.fractions[i] - cell.fractions[j]
            w = d - np.floor(d)
            w[np.abs(w - 1.0) < 1e-12] = 0.0
            key = tuple((np.round(w, 12) + 0.0).tolist())
            if key not in groups:
                groups[key] = [0.0, 0, w]
            groups[key][0] += 0.5 * float(q[i] * q[j])
            groups[key][1] += 1
    out = [diag]
    for coeff, mult, w in groups.values():
        out.append((coeff, mult, w, False))
    return out


# bounded memo of image tables keyed by (cell token, shape, extent)
_TABLE_CACHE: "OrderedDict[tuple, list]" = OrderedDict()
_TABLE_CACHE_MAX = 12


def _image_table(cell: UnitCell, shape: str, extent: float) -> list[dict]:
    """Per-group sorted image radii and weights for one truncation region."""
    key = (cell.token, shape, float(extent))
    hit = _TABLE_CACHE.get(key)
    if hit is not None:
        _TABLE_CACHE.move_to_end(key)
        return hit

    basis = cell.basis
    table = []
    for coeff, mult, p, exclude_origin in _offset_groups(cell):
        if shape == "sphere":
            R = float(extent)
            row_norms = np.linalg.norm(basis.inverse, axis=1)
            r_hi = R / (1.0 - TIE_EPS)
            bounds = np.ceil(r_hi * row_norms + np.abs(p)) + 1
            n = _int_grid(bounds)
            if exclude_origin:
                n = n[np.any(n != 0, axis=1)]
            r = np.linalg.norm((n + p) @ basis.matrix.T, axis=1)
            r_lo = R / (1.0 + TIE_EPS)
            keep = r <= r_hi
            n, r = n[keep], r[keep]
            weights = np.where(r >= r_lo, 0.5, 1.0)
        else:
            M = int(extent)
            n = _int_grid(np.array([M, M, M]))
            if exclude_origin:
                n = n[np.any(n != 0, axis=1)]
            r = np.linalg.norm((n + p) @ basis.matrix.T, axis=1)
            weights = np.ones_like(r)
        order = np.lexsort((n[:, 2], n[:, 1], n[:, 0], r))
        table.append(
            {
                "coeff": coeff,
                "mult": mult,
                "radii": r[order],
                "weights": weights[order],
            }
        )

    _TABLE_CACHE[key] = table
    if len(_TABLE_CACHE) > _TABLE_CACHE_MAX:
        _TABLE_CACHE.popitem(last=False)
    return table


def _validate_region(region: TruncationRegion) -> None:
    if region.shape not in ("sphere", "cube"):
        raise ArgumentError(f"unknown region shape {region.shape!r}")
    if region.shape == "sphere":
        if not (region.extent > 0 and np.isfinite(region.extent)):
            raise ArgumentError(f"sphere radius must be positive, got {region.extent!r}")
    else:
        if region.extent < 0 or region.extent != int(region.extent):
            raise ArgumentError(f"cube extent must be a nonnegative integer, got {region.extent!r}")


def truncated_sum(cell: UnitCell, s: float, region: TruncationRegion) -> SumResult:
    """Truncated double sum of q_i q_j / radius^s over the given region.

    Includes every ordered site pair with the 1/2 prefactor, excluding the
    self interaction.  Spherical truncation applies the psi tie convention on
    the cutoff shell; cube truncation keeps the full index block.
    """
    _validate_region(region)
    s = float(s)
    table = _image_table(cell, region.shape, region.extent)

    parts = []
    terms = 0
    surface_terms = 0
    for g in table:
        r, w = g["radii"], g["weights"]
        terms += g["mult"] * len(r)
        surface_terms += g["mult"] * int(np.count_nonzero(w == 0.5))
        if len(r):
            parts.append(g["coeff"] * w * r ** (-s))
    value = fsum(np.concatenate(parts).tolist()) if parts else 0.0
    return SumResult(
        value=value,
        terms=terms,
        surface_terms=surface_terms,
        region=region,
        s=s,
    )


def naive_sphere_sum(cell: UnitCell, s: float, R: float) -> float:
    """Brute-force spherical sum with plain loops and plain accumulation.

    Reference path kept deliberately independent of truncated_sum: no offset
    grouping, no sorting, no compensation.
    """
    V = cell.basis.matrix
    row_norms = np.linalg.norm(cell.basis.inverse, axis=1)
    total = 0.0
    for i in range(cell.nsites):
        qi, pi = float(cell.charges[i]), cell.fractions[i]
        for j in range(cell.nsites):
            qj, pj = float(cell.charges[j]), cell.fractions[j]
            p = pi - pj
            bounds = [int(b) for b in np.ceil(R / (1 - TIE_EPS) * row_norms + np.abs(p)) + 1]
            for n1 in range(-bounds[0], bounds[0] + 1):
                for n2 in range(-bounds[1], bounds[1] + 1):
                    for n3 in range(-bounds[2], bounds[2] + 1):
                        if i == j and n1 == 0 and n2 == 0 and n3 == 0:
                            continue
                        x = (n1 + p[0], n2 + p[1], n3 + p[2])
                        cx = V[0, 0] * x[0] + V[0, 1] * x[1] + V[0, 2] * x[2]
                        cy = V[1, 0] * x[0] + V[1, 1] * x[1] + V[1, 2] * x[2]
                        cz = V[2, 0] * x[0] + V[2, 1] * x[1] + V[2, 2] * x[2]
                        r = sqrt(cx * cx + cy * cy + cz * cz)
                        w = psi(R / r)
                        if w:
                            total += 0.5 * qi * qj * w * r ** (-s)
    return total


def naive_cube_sum(cell: UnitCell, s: float, M: int) -> float:
    """Brute-force cube sum with plain loops and plain accumulation."""
    V = cell.basis.matrix
    total = 0.0
    for i in range(cell.nsites):
        qi, pi = float(cell.charges[i]), cell.fractions[i]
        for j in range(cell.nsites):
            qj, pj = float(cell.charges[j]), cell.fractions[j]
            p = pi - pj
            for n1 in range(-M, M + 1):
                for n2 in range(-M, M + 1):
                    for n3 in range(-M, M + 1):
                        if i == j and n1 == 0 and n2 == 0 and n3 == 0:
                            continue
                        x = (n1 + p[0], n2 + p[1], n3 + p[2])
                        cx = V[0, 0] * x[0] + V[0, 1] * x[1] + V[0, 2] * x[2]
                        cy = V[1, 0] * x[0] + V[1, 1] * x[1] + V[1, 2] * x[2]
                        cz = V[2, 0] * x[0] + V[2, 1] * x[1] + V[2, 2] * x[2]
                        r = sqrt(cx * cx + cy * cy + cz * cz)
                        total += 0.5 * qi * qj * r ** (-s)
    return total


def clear_of_shells(cell: UnitCell, R: float) -> float:
    """Nudge R up by 10*TIE_EPS*R when it lies within the tie band of a shell."""
    table = _image_table(cell, "sphere", R * (1 + 3 * TIE_EPS))
    for g in table:
        r = g["radii"]
        if len(r) and np.min(np.abs(r - R)) <= TIE_EPS * R:
            return R * (1 + 10 * TIE_EPS)
    return R


_SWEEP_METHODS = ("sphere", "cube", "wolf", "wolf_damped")


def convergence_series(
    cell: UnitCell,
    s: float,
    method: str,
    grid,
    alpha: float | None = None,
) -> ConvergenceSeries:
    """Evaluate one estimator over a strictly increasing extent grid.

    Sphere-based grid radii landing in the tie band of a shell are nudged
    upward; cube extents must be integers.  wolf methods require s = 1 and
    wolf_damped additionally requires alpha.
    """
    if method not in _SWEEP_METHODS:
        raise ArgumentError(f"unknown series method {method!r}")
    grid = [float(g) for g in grid]
    if not grid:
        raise ArgumentError("extent grid must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ArgumentError("extent grid must be strictly increasing")
    if method in ("wolf", "wolf_damped") and float(s) != 1.0:
        raise ArgumentError(f"method {method!r} is defined at s = 1 only")
    if method == "wolf_damped":
        if alpha is None or not (alpha > 0):
            raise ArgumentError("wolf_damped requires a positive alpha")
    elif alpha is not None:
        raise ArgumentError(f"alpha is not a parameter of method {method!r}")

    from . import wolf as _wolf  # deferred: wolf builds on this module

    points = []
    for extent in grid:
        if method == "cube":
            res = truncated_sum(cell, s, TruncationRegion("cube", extent))
            points.append(SeriesPoint(extent, res.value, res.terms, res.surface_terms))
            continue
        R = clear_of_shells(cell, extent)
        counts = truncated_sum(cell, s, TruncationRegion("sphere", R))
        if method == "sphere":
            value = counts.value
        elif method == "wolf":
            value = _wolf.wolf_undamped(cell, R)
        else:
            value = _wolf.wolf_damped(cell, R, alpha)
        points.append(SeriesPoint(R, value, counts.terms, counts.surface_terms))
    return ConvergenceSeries(method=method, s=float(s), alpha=alpha, points=tuple(points))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_series_csv(series, path_or_file) -> None:
    """Write one or more convergence series to CSV.

    Floating-point fields carry 17 significant digits; alpha is blank for
    undamped methods.
    """
    if isinstance(series, ConvergenceSeries):
        series = [series]

    def _emit(fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for sr in series:
            alpha = "" if sr.alpha is None else _fmt(sr.alpha)
            for pt in sr.points:
                writer.writerow(
                    (
                        sr.method,
                        _fmt(sr.s),
                        alpha,
                        _fmt(pt.extent),
                        _fmt(pt.value),
                        pt.terms,
                        pt.surface_terms,
                    )
                )

    if isinstance(path_or_file, io.IOBase) or hasattr(path_or_file, "write"):
        _emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _emit(fh)
