"""Charge-neutralized spherical truncation of the Coulomb sum.

The plain spherical sum at s = 1 oscillates with the cutoff because the
truncation sphere carries a fluctuating net charge.  Placing a compensating
mirror charge on the sphere surface for every included charge removes the
imbalance: the result converges to the Ewald energy as the radius grows.
``wolf_undamped`` implements the bare neutralized sum, ``wolf_damped`` the
erfc-screened variant whose limit acquires an alpha-dependent bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import fsum, pi, sqrt

import numpy as np
import scipy.special as sc

from .crystal import UnitCell, min_image_distance
from .errors import ArgumentError
from .trunc import (
    ConvergenceSeries,
    TruncationRegion,
    _image_table,
    clear_of_shells,
    convergence_series,
    truncated_sum,
)

__all__ = [
    "WolfParams",
    "LimitEstimate",
    "wolf_undamped",
    "wolf_damped",
    "estimate_limit",
    "shell_avoiding_radii",
    "damped_bias",
]


@dataclass(frozen=True)
class WolfParams:
    """Cutoff radius plus optional damping; alpha absent means undamped."""

    R: float
    alpha: float | None = None

    def __post_init__(self):
        if not (self.R > 0 and np.isfinite(self.R)):
            raise ArgumentError(f"R must be positive and finite, got {self.R!r}")
        if self.alpha is not None and not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ArgumentError("alpha must be positive when given")

    def energy(self, cell: UnitCell) -> float:
        if self.alpha is None:
            return wolf_undamped(cell, self.R)
        return wolf_damped(cell, self.R, self.alpha)


@dataclass(frozen=True)
class LimitEstimate:
    """Trailing-window summary of a convergence series."""

    value: float
    window: tuple[float, float]
    spread: float
    samples: int


def wolf_undamped(cell: UnitCell, R: float) -> float:
    """Neutralized spherical sum at s = 1 and cutoff R.

    Combines the plain sums at s = 1 and s = 0 over the same sphere with the
    self-mirror term: E_R(1) - (E_R(0) + sum q_i^2) / R.  R is nudged off
    shell radii first.
    """
    if not (R > 0 and np.isfinite(R)):
        raise ArgumentError(f"radius must be positive and finite, got {R!r}")
    R = clear_of_shells(cell, R)
    e1 = truncated_sum(cell, 1.0, TruncationRegion("sphere", R)).value
    e0 = truncated_sum(cell, 0.0, TruncationRegion("sphere", R)).value
    return e1 - (e0 + cell.square_charge_total) / R


def wolf_damped(cell: UnitCell, R: float, alpha: float) -> float:
    """Damped neutralized sum: erfc screening plus surface charge removal.

    Every included image pair contributes erfc(alpha r)/r minus the same
    expression at the cutoff; the self term removes half a mirror interaction
    per charge plus the alpha/sqrt(pi) damping limit.  Inclusion and surface
    weighting follow the same image table as the plain truncated sums.
    """
    if not (R > 0 and np.isfinite(R)):
        raise ArgumentError(f"radius must be positive and finite, got {R!r}")
    if not (alpha > 0 and np.isfinite(alpha)):
        raise ArgumentError(f"alpha must be positive and finite, got {alpha!r}")
    R = clear_of_shells(cell, R)
    shell_term = float(sc.erfc(alpha * R)) / R
    parts = []
    for g in _image_table(cell, "sphere", R):
        r, w = g["radii"], g["weights"]
        if len(r):
            parts.append(g["coeff"] * w * (sc.erfc(alpha * r) / r - shell_term))
    pair_part = fsum(np.concatenate(parts).tolist()) if parts else 0.0
    self_part = -(0.5 * shell_term + alpha / sqrt(pi)) * cell.square_charge_total
    return pair_part + self_part


def estimate_limit(series: ConvergenceSeries, window_fraction: float = 0.25) -> LimitEstimate:
    """Mean of the trailing window of a convergence series.

    The window keeps samples with extent >= (1 - window_fraction) * max
    extent; at least two must fall inside so the window has positive width.
    """
    if not (0 < window_fraction < 1):
        raise ArgumentError(f"window_fraction must lie in (0, 1), got {window_fraction!r}")
    pts = series.points
    if len(pts) < 8:
        raise ArgumentError(f"limit estimation needs at least 8 samples, got {len(pts)}")
    threshold = (1.0 - window_fraction) * pts[-1].extent
    window = [p for p in pts if p.extent >= threshold * (1 - 1e-12)]
    if len(window) < 2:
        raise ArgumentError("trailing window holds fewer than 2 samples; widen window_fraction")
    values = [p.value for p in window]
    return LimitEstimate(
        value=fsum(values) / len(values),
        window=(window[0].extent, window[-1].extent),
        spread=max(values) - min(values),
        samples=len(window),
    )


def shell_avoiding_radii(cell: UnitCell, r_min: float, r_max: float, count: int) -> list[float]:
    """Strictly increasing radii in [r_min, r_max] at midpoints between shells.

    Evenly spaced candidates snap to the midpoint of the shell gap containing
    them, so no sample radius ties with an image shell.
    """
    if not (0 < r_min < r_max and np.isfinite(r_max)):
        raise ArgumentError("need 0 < r_min < r_max")
    if count < 1:
        raise ArgumentError("count must be at least 1")
    shells = np.concatenate(
        [g["radii"] for g in _image_table(cell, "sphere", r_max * 1.01)]
    )
    shells = np.unique(shells)
    if len(shells):
        distinct = [shells[0]]
        for r in shells[1:]:
            if r - distinct[-1] > 1e-9 * r:
                distinct.append(r)
        shells = np.array(distinct)

    radii: list[float] = []
    for cand in np.linspace(r_min, r_max, count):
        # candidates tying a shell fall into the gap above it
        k = int(np.searchsorted(shells, cand * (1.0 + 2e-9)))
        lo = shells[k - 1] if k > 0 else 0.0
        hi = shells[k] if k < len(shells) else r_max * 1.01
        hi = min(hi, r_max)
        if hi <= lo:
            # cand ties a shell sitting exactly at r_max: use the gap below
            hi = lo
            lo = shells[k - 2] if k > 1 else 0.0
        lo = max(lo, r_min if not radii else radii[-1])
        mid = 0.5 * (lo + hi)
        if radii and mid <= radii[-1]:
            mid = 0.5 * (radii[-1] + hi)
        if not radii or mid > radii[-1]:
            radii.append(float(mid))
    return radii


def damped_bias(
    cell: UnitCell,
    alpha: float,
    r_max: float,
    *,
    r_min: float | None = None,
    samples: int = 32,
    window_fraction: float = 0.25,
) -> float:
    """Limit of the damped neutralized sum minus the Ewald energy.

    Sweeps wolf_damped over shell-avoiding radii up to r_max and subtracts
    the Ewald reference from the trailing-window estimate.  r_max must exceed
    ten times the smallest image distance so the sweep reaches the asymptotic
    regime.
    """
    from .epstein import ewald_cell_energy  # deferred: avoids import cycle at package init

    if not (alpha > 0 and np.isfinite(alpha)):
        raise ArgumentError(f"alpha must be positive and finite, got {alpha!r}")
    if not (r_max > 10 * min_image_distance(cell)):
        raise ArgumentError("r_max must exceed 10x the minimum image distance")
    if samples < 8:
        raise ArgumentError("limit estimation needs at least 8 samples")
    lo = r_min if r_min is not None else r_max / 2
    radii = shell_avoiding_radii(cell, lo, r_max, samples)
    series = convergence_series(cell, 1.0, "wolf_damped", radii, alpha)
    estimate = estimate_limit(series, window_fraction)
    return estimate.value - ewald_cell_energy(cell)
