"""Shared fixtures: preset cells, Ewald reference energies, and the wolf
window sweeps that several acceptance checks reuse (they dominate runtime,
so they are computed once per session)."""

import pytest

from latsum.crystal import PRESET_NAMES, preset
from latsum.epstein import ewald_cell_energy
from latsum.trunc import convergence_series
from latsum.wolf import shell_avoiding_radii

WINDOW_LOW = (10.0, 20.0)
WINDOW_HIGH = (30.0, 40.0)
WINDOW_COUNT = 16


@pytest.fixture(scope="session")
def cells():
    return {name: preset(name) for name in PRESET_NAMES}


@pytest.fixture(scope="session")
def ewald_refs(cells):
    return {name: ewald_cell_energy(cell) for name, cell in cells.items()}


@pytest.fixture(scope="session")
def wolf_windows(cells):
    """Undamped wolf series over 16 shell-avoiding radii per preset, once
    for radii in [10, 20] and once for [30, 40]."""
    out = {}
    for name, cell in cells.items():
        windows = {}
        for key, (lo, hi) in {"low": WINDOW_LOW, "high": WINDOW_HIGH}.items():
            radii = shell_avoiding_radii(cell, lo, hi, WINDOW_COUNT)
            windows[key] = convergence_series(cell, 1.0, "wolf", radii)
        out[name] = windows
    return out


@pytest.fixture(scope="session")
def rocksalt_sphere_high(cells, wolf_windows):
    """Raw spherical sum on the same high-window radii as the wolf sweep."""
    radii = [float(r) for r in wolf_windows["rocksalt"]["high"].extents]
    return convergence_series(cells["rocksalt"], 1.0, "sphere", radii)
