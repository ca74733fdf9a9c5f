"""Electrostatic lattice sums for neutral periodic point-charge systems."""

from .crystal import (
    PRESET_NAMES,
    LatticeBasis,
    PairOffset,
    UnitCell,
    build_cell,
    build_lattice,
    min_image_distance,
    pair_offset,
    preset,
    quadratic_radius,
)
from .trunc import (
    ConvergenceSeries,
    SumResult,
    TruncationRegion,
    convergence_series,
    enumerate_images,
    naive_cube_sum,
    naive_sphere_sum,
    psi,
    truncated_sum,
    write_series_csv,
)
from .epstein import (
    EwaldParams,
    ZetaContext,
    cell_energy_s,
    completed_lambda,
    epstein_zeta,
    ewald_cell_energy,
    reciprocal_energy,
    residue_estimate,
)
from .wolf import (
    LimitEstimate,
    WolfParams,
    damped_bias,
    estimate_limit,
    shell_avoiding_radii,
    wolf_damped,
    wolf_undamped,
)
from .harness import (
    CheckReport,
    RunConfig,
    check_suite,
    load_config,
    render_report,
    run,
)

__version__ = "0.1.0"
