"""Deterministic convergence and bias figures from lattice-sum CSV sweeps."""

from .figures import (
    PlotError,
    PlotSpec,
    SchemaError,
    render_alpha_bias,
    render_convergence,
)

__version__ = "0.1.0"

__all__ = [
    "PlotError",
    "PlotSpec",
    "SchemaError",
    "render_alpha_bias",
    "render_convergence",
    "__version__",
]
