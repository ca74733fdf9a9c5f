"""Neutralized truncation: decomposition, continuity, damping, bias limits."""

import math

import numpy as np
import pytest
import scipy.special as sc

from latsum.crystal import preset
from latsum.epstein import reciprocal_energy
from latsum.errors import ArgumentError
from latsum.trunc import TruncationRegion, clear_of_shells, truncated_sum
from latsum.wolf import (
    LimitEstimate,
    WolfParams,
    damped_bias,
    estimate_limit,
    shell_avoiding_radii,
    wolf_damped,
    wolf_undamped,
)
from latsum.trunc import ConvergenceSeries, SeriesPoint


def _series(values, extents=None):
    extents = extents or [float(i + 1) for i in range(len(values))]
    points = tuple(
        SeriesPoint(extent=e, value=v, terms=0, surface_terms=0)
        for e, v in zip(extents, values)
    )
    return ConvergenceSeries(method="wolf", s=1.0, alpha=None, points=points)


def test_wolf_params():
    cell = preset("cscl")
    assert WolfParams(12.3).energy(cell) == wolf_undamped(cell, 12.3)
    assert WolfParams(12.3, 0.4).energy(cell) == wolf_damped(cell, 12.3, 0.4)
    with pytest.raises(ArgumentError):
        WolfParams(0.0)
    with pytest.raises(ArgumentError):
        WolfParams(-2.0, 0.1)
    with pytest.raises(ArgumentError):
        WolfParams(10.0, -0.1)
    with pytest.raises(ArgumentError):
        WolfParams(float("inf"))


def test_decomposition_identity():
    # the neutralized sum is exactly the two plain sums plus the self term
    cell = preset("cscl")
    R = clear_of_shells(cell, 7.3)
    e1 = truncated_sum(cell, 1.0, TruncationRegion("sphere", R)).value
    e0 = truncated_sum(cell, 0.0, TruncationRegion("sphere", R)).value
    assert wolf_undamped(cell, 7.3) == e1 - (e0 + cell.square_charge_total) / R


def test_pairwise_mirror_form():
    # every included pair interacts via 1/r - 1/R, and each charge carries
    # half an interaction with its own mirror: -q^2/R in total per site
    cell = preset("cscl")
    R = clear_of_shells(cell, 5.1)
    V = cell.basis.matrix
    total = 0.0
    for i in range(cell.nsites):
        qi, pi = float(cell.charges[i]), cell.fractions[i]
        for j in range(cell.nsites):
            qj, pj = float(cell.charges[j]), cell.fractions[j]
            p = pi - pj
            for n1 in range(-8, 9):
                for n2 in range(-8, 9):
                    for n3 in range(-8, 9):
                        if i == j and n1 == n2 == n3 == 0:
                            continue
                        x = np.array([n1, n2, n3], dtype=float) + p
                        r = float(np.linalg.norm(V @ x))
                        if r <= R:
                            total += 0.5 * qi * qj * (1.0 / r - 1.0 / R)
    total -= cell.square_charge_total / R
    assert wolf_undamped(cell, 5.1) == pytest.approx(total, rel=1e-12)


def test_wolf_is_continuous_across_shells():
    # crossing a shell moves O(1) worth of terms between the two plain sums,
    # but the neutralization cancels the jump exactly
    cell = preset("rocksalt")
    below, above = 2.0 * (1 - 1e-7), 2.0 * (1 + 1e-7)
    e1_below = truncated_sum(cell, 1.0, TruncationRegion("sphere", below)).value
    e1_above = truncated_sum(cell, 1.0, TruncationRegion("sphere", above)).value
    assert abs(e1_above - e1_below) > 1.0
    assert abs(wolf_undamped(cell, above) - wolf_undamped(cell, below)) < 1e-5


def test_wolf_validation():
    cell = preset("cscl")
    with pytest.raises(ArgumentError):
        wolf_undamped(cell, 0.0)
    with pytest.raises(ArgumentError):
        wolf_damped(cell, 8.0, 0.0)
    with pytest.raises(ArgumentError):
        wolf_damped(cell, -8.0, 0.5)


def test_damped_tends_to_undamped_plus_half_self():
    # as alpha -> 0 the damped form keeps one extra half mirror interaction
    # per charge: D -> W + sum(q^2) / (2R); the first-order alpha terms
    # cancel between pair, shell and self contributions
    cell = preset("cscl")
    R = 9.7
    w = wolf_undamped(cell, R)
    offset = cell.square_charge_total / (2.0 * clear_of_shells(cell, R))
    gap_small = wolf_damped(cell, R, 1e-6) - (w + offset)
    assert abs(gap_small) < 1e-8
    gap_mid = wolf_damped(cell, R, 1e-3) - (w + offset)
    assert abs(gap_mid) < 1e-4
    assert abs(gap_small) < abs(gap_mid)


def test_damped_value_formula_spot_check():
    # independent mini implementation on a tiny radius
    cell = preset("cscl")
    R = clear_of_shells(cell, 2.3)
    alpha = 0.8
    V = cell.basis.matrix
    shell = float(sc.erfc(alpha * R)) / R
    total = 0.0
    for i in range(cell.nsites):
        qi, pi = float(cell.charges[i]), cell.fractions[i]
        for j in range(cell.nsites):
            qj, pj = float(cell.charges[j]), cell.fractions[j]
            p = pi - pj
            for n1 in range(-4, 5):
                for n2 in range(-4, 5):
                    for n3 in range(-4, 5):
                        if i == j and n1 == n2 == n3 == 0:
                            continue
                        r = float(np.linalg.norm(V @ (np.array([n1, n2, n3]) + p)))
                        if r <= R:
                            total += 0.5 * qi * qj * (float(sc.erfc(alpha * r)) / r - shell)
    total -= (0.5 * shell + alpha / math.sqrt(math.pi)) * cell.square_charge_total
    assert wolf_damped(cell, 2.3, alpha) == pytest.approx(total, rel=1e-12)


def test_estimate_limit_constant_series():
    est = estimate_limit(_series([3.25] * 12))
    assert isinstance(est, LimitEstimate)
    assert est.value == 3.25
    assert est.spread == 0.0
    assert est.samples >= 2
    assert est.window[0] >= 0.75 * 12.0 * (1 - 1e-9)
    assert est.window[1] == 12.0


def test_estimate_limit_alternating_series():
    values = [3.0 + (0.5 if i % 2 == 0 else -0.5) for i in range(12)]
    est = estimate_limit(_series(values))
    assert abs(est.value - 3.0) <= 0.5
    assert est.spread == 1.0


def test_estimate_limit_validation():
    with pytest.raises(ArgumentError):
        estimate_limit(_series([1.0] * 7))
    with pytest.raises(ArgumentError):
        estimate_limit(_series([1.0] * 12), window_fraction=0.0)
    with pytest.raises(ArgumentError):
        estimate_limit(_series([1.0] * 12), window_fraction=1.0)
    # a window too narrow to hold two samples is rejected, not silently
    # collapsed to a single point
    with pytest.raises(ArgumentError):
        estimate_limit(_series([1.0] * 12), window_fraction=0.01)


def test_shell_avoiding_radii():
    cell = preset("rocksalt")
    radii = shell_avoiding_radii(cell, 10.0, 20.0, 16)
    assert len(radii) == 16
    assert all(b > a for a, b in zip(radii, radii[1:]))
    assert radii[0] > 10.0 and radii[-1] <= 20.0
    for r in radii:
        # already clear of every shell: the nudge has nothing to do
        assert clear_of_shells(cell, r) == r
    with pytest.raises(ArgumentError):
        shell_avoiding_radii(cell, 20.0, 10.0, 4)
    with pytest.raises(ArgumentError):
        shell_avoiding_radii(cell, 10.0, 20.0, 0)


def test_damped_bias_matches_reciprocal_energy():
    # dual route: the R -> infinity limit of the damped sum differs from the
    # Ewald energy by exactly the (negated) reciprocal-space part
    cell = preset("cscl")
    bias = damped_bias(cell, 1.0, 40.0)
    reference = -reciprocal_energy(cell, 1.0)
    assert abs(reference) > 1e-5
    assert bias == pytest.approx(reference, abs=1e-8)


def test_damped_bias_validation():
    cell = preset("cscl")
    with pytest.raises(ArgumentError):
        damped_bias(cell, 0.0, 40.0)
    with pytest.raises(ArgumentError):
        damped_bias(cell, 1.0, 5.0)
    with pytest.raises(ArgumentError):
        damped_bias(cell, 1.0, 40.0, samples=4)
