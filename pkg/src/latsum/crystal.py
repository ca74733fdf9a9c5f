"""Lattice bases, unit cells and geometric helpers.

A lattice basis stores the three generating vectors as columns of a matrix
together with derived quantities used throughout the package: the inverse
matrix (fractional coordinates), the doubled Gram matrix and the determinant.
A unit cell couples a basis with an ordered, charge-neutral list of point
charges at fractional positions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateBasisError,
    GeometryError,
    NeutralityError,
)

__all__ = [
    "LatticeBasis",
    "UnitCell",
    "PairOffset",
    "build_lattice",
    "build_cell",
    "pair_offset",
    "quadratic_radius",
    "min_image_distance",
    "preset",
    "PRESET_NAMES",
]

# unique id per UnitCell instance, used as a cache key by the sum routines
_TOKENS = itertools.count()


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    """Three lattice vectors and derived matrices.

    Attributes
    ----------
    matrix : (3, 3) ndarray
        Column matrix of the lattice vectors (column k is the k-th vector).
    inverse : (3, 3) ndarray
        Inverse of ``matrix``; maps Cartesian to fractional coordinates.
    quad_form : (3, 3) ndarray
        Twice the Gram matrix of the lattice vectors.
    det : float
        Determinant of ``matrix`` (signed cell volume).
    """

    matrix: np.ndarray
    inverse: np.ndarray
    quad_form: np.ndarray
    det: float

    @property
    def e1(self) -> np.ndarray:
        return self.matrix[:, 0]

    @property
    def e2(self) -> np.ndarray:
        return self.matrix[:, 1]

    @property
    def e3(self) -> np.ndarray:
        return self.matrix[:, 2]

    @property
    def volume(self) -> float:
        return abs(self.det)


@dataclass(frozen=True, eq=False)
class UnitCell:
    """A lattice basis plus an ordered list of point charges.

    Fractional positions are wrapped into [0, 1).  Charges sum to zero.
    Instances are immutable; ``token`` identifies the instance for caching.
    """

    basis: LatticeBasis
    charges: np.ndarray
    fractions: np.ndarray
    token: int = field(repr=False, default=-1)

    @property
    def nsites(self) -> int:
        return len(self.charges)

    @property
    def sites(self) -> list[tuple[float, np.ndarray]]:
        return [(float(q), p) for q, p in zip(self.charges, self.fractions)]

    @property
    def square_charge_total(self) -> float:
        """Sum of squared charges."""
        return float(np.dot(self.charges, self.charges))

    def cartesian(self) -> np.ndarray:
        """Cartesian site positions, one row per site."""
        return self.fractions @ self.basis.matrix.T


@dataclass(frozen=True)
class PairOffset:
    """Fractional separation between two sites of one cell."""

    i: int
    j: int
    vector: tuple[float, float, float]


def build_lattice(e1, e2, e3) -> LatticeBasis:
    """Construct a LatticeBasis from three generating vectors.

    Raises DegenerateBasisError when the vectors are (numerically) linearly
    dependent: |det| below 1e-12 times the product of the vector norms.
    """
    cols = [np.asarray(v, dtype=float).reshape(3) for v in (e1, e2, e3)]
    if not all(np.isfinite(c).all() for c in cols):
        raise DegenerateBasisError("lattice vectors must be finite")
    matrix = np.column_stack(cols)
    det = float(np.linalg.det(matrix))
    norm_product = float(np.prod([np.linalg.norm(c) for c in cols]))
    if abs(det) <= 1e-12 * norm_product or norm_product == 0.0:
        raise DegenerateBasisError(
            f"degenerate basis: |det| = {abs(det):.3e} vs norms product {norm_product:.3e}"
        )
    inverse = np.linalg.inv(matrix)
    quad_form = 2.0 * matrix.T @ matrix
    return LatticeBasis(
        matrix=_readonly(matrix),
        inverse=_readonly(inverse),
        quad_form=_readonly(quad_form),
        det=det,
    )


def _wrap_unit(p: np.ndarray) -> np.ndarray:
    """Wrap fractional coordinates into [0, 1), snapping values near 1 to 0."""
    w = p - np.floor(p)
    w[np.abs(w - 1.0) < 1e-12] = 0.0
    return w


def build_cell(basis: LatticeBasis, sites) -> UnitCell:
    """Construct a UnitCell from (charge, fractional position) pairs.

    Positions are wrapped into [0, 1).  Requires at least two sites, overall
    charge neutrality and pairwise distinct site positions (minimum image
    distance above 1e-9).
    """
    sites = list(sites)
    if len(sites) < 2:
        raise ArgumentError("a cell needs at least two sites")
    charges = np.array([float(q) for q, _ in sites], dtype=float)
    fractions = np.array([np.asarray(p, dtype=float).reshape(3) for _, p in sites])
    if not (np.isfinite(charges).all() and np.isfinite(fractions).all()):
        raise GeometryError("charges and positions must be finite")
    fractions = _wrap_unit(fractions)

    total = charges.sum()
    if abs(total) > 1e-12 * np.abs(charges).sum():
        raise NeutralityError(f"cell charge {total:.3e} is not zero")

    # reject coincident sites: minimum over near images of the pair distance
    shifts = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=3)))
    for i in range(len(sites)):
        for j in range(i + 1, len(sites)):
            d = fractions[i] - fractions[j] + shifts
            r = np.linalg.norm(d @ basis.matrix.T, axis=1)
            if r.min() <= 1e-9:
                raise GeometryError(f"sites {i} and {j} coincide (distance {r.min():.3e})")

    return UnitCell(
        basis=basis,
        charges=_readonly(charges),
        fractions=_readonly(fractions),
        token=next(_TOKENS),
    )


def pair_offset(cell: UnitCell, i: int, j: int) -> PairOffset:
    """Fractional offset of site i relative to site j (not wrapped)."""
    n = cell.nsites
    if not (0 <= i < n and 0 <= j < n):
        raise ArgumentError(f"site indices ({i}, {j}) out of range for {n} sites")
    d = cell.fractions[i] - cell.fractions[j]
    return PairOffset(i=i, j=j, vector=(float(d[0]), float(d[1]), float(d[2])))


def quadratic_radius(n, p, basis: LatticeBasis) -> float:
    """Distance of image n + p from the origin in lattice metric.

    Evaluates [(n+p)^T quad_form (n+p) / 2]^(1/2), which equals the Euclidean
    norm of matrix @ (n+p).
    """
    x = np.asarray(n, dtype=float).reshape(3) + np.asarray(p, dtype=float).reshape(3)
    return float(np.sqrt(0.5 * x @ basis.quad_form @ x))


def min_image_distance(cell: UnitCell) -> float:
    """Smallest nonzero image distance over all site pairs of the cell.

    Includes the self pair (distance to the nearest lattice translate) so the
    result bounds every summand radius from below.
    """
    shifts = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=3)))
    best = np.inf
    # self pair: shortest lattice vector
    r = np.linalg.norm(shifts @ cell.basis.matrix.T, axis=1)
    best = min(best, r[r > 0].min())
    for i in range(cell.nsites):
        for j in range(i + 1, cell.nsites):
            d = cell.fractions[i] - cell.fractions[j] + shifts
            r = np.linalg.norm(d @ cell.basis.matrix.T, axis=1)
            best = min(best, r.min())
    return float(best)


def _cubic(a: float) -> LatticeBasis:
    return build_lattice((a, 0, 0), (0, a, 0), (0, 0, a))


def _preset_rocksalt() -> UnitCell:
    # conventional cubic cell, edge 2, nearest-neighbour distance 1
    basis = _cubic(2.0)
    plus = [(0, 0, 0), (0.5, 0.5, 0), (0.5, 0, 0.5), (0, 0.5, 0.5)]
    minus = [(0.5, 0, 0), (0, 0.5, 0), (0, 0, 0.5), (0.5, 0.5, 0.5)]
    sites = [(1.0, p) for p in plus] + [(-1.0, p) for p in minus]
    return build_cell(basis, sites)


def _preset_cscl() -> UnitCell:
    basis = _cubic(1.0)
    return build_cell(basis, [(1.0, (0, 0, 0)), (-1.0, (0.5, 0.5, 0.5))])


def _preset_orthorhombic() -> UnitCell:
    basis = build_lattice((1.0, 0, 0), (0, 1.2, 0), (0, 0, 1.5))
    return build_cell(basis, [(1.0, (0, 0, 0)), (-1.0, (0.5, 0.5, 0.5))])


def _preset_hexagonal() -> UnitCell:
    a, c = 1.0, 1.6
    basis = build_lattice((a, 0, 0), (a / 2, a * np.sqrt(3) / 2, 0), (0, 0, c))
    return build_cell(basis, [(1.0, (0, 0, 0)), (-1.0, (0.5, 0.5, 0.5))])


_PRESETS = {
    "rocksalt": _preset_rocksalt,
    "cscl": _preset_cscl,
    "orthorhombic_test": _preset_orthorhombic,
    "hexagonal_test": _preset_hexagonal,
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str) -> UnitCell:
    """Return a named reference cell; raises KeyError for unknown names."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}") from None
    return factory()
