"""Damped wave equation simulator and verification harness for exterior domains."""

from .damping import DampingModel, eval_damping, infimum_a1, verify_asymptotics
from .errors import ConfigError, NumericsError
from .grid import Grid, GridConfig, build_grid
from .weight import WeightField, assemble_weight, newton_potential, phi_weight, verify_weight

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "NumericsError",
    "Grid",
    "GridConfig",
    "build_grid",
    "DampingModel",
    "eval_damping",
    "verify_asymptotics",
    "infimum_a1",
    "WeightField",
    "assemble_weight",
    "verify_weight",
    "newton_potential",
    "phi_weight",
    "__version__",
]
