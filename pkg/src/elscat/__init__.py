"""Inverse scattering of 2D elastic waves by a matrix load.

Forward Lippmann-Schwinger solves on a periodic grid, Born approximations
from backscattering or fixed-angle far-field data, and the iteration that
removes the error term of those approximations.
"""

__version__ = "0.1.0"

from .backscatter import (BackscatterDataset, born_backscatter, iterate_backscatter,
                          synthesize_backscatter)
from .experiments import (ConfigError, ExperimentConfig, LoadSpec, add_noise, load_config,
                          make_load)
from .fixed_angle import (FixedAngleDataset, born_fixed_angle, ewald_params, iterate_fixed_angle,
                          synthesize_fixed_angle)
from .forward import (LameParams, PlaneWave, SolverError, SolverSettings, far_field,
                      resolvent_apply, scattering_datum, solve_lippmann_schwinger)
from .grid import GridSpec, dft_forward, dft_inverse, make_grid, nuft_eval
from .reconstruct import (IterationOptions, IterationResult, reconstruction_error,
                          relative_l2_error)

__all__ = [
    "BackscatterDataset", "ConfigError", "ExperimentConfig", "FixedAngleDataset", "GridSpec",
    "IterationOptions", "IterationResult", "LameParams", "LoadSpec", "PlaneWave", "SolverError",
    "SolverSettings", "add_noise", "born_backscatter", "born_fixed_angle", "dft_forward",
    "dft_inverse", "ewald_params", "far_field", "iterate_backscatter", "iterate_fixed_angle",
    "load_config", "make_grid", "make_load", "nuft_eval", "reconstruction_error",
    "relative_l2_error", "resolvent_apply", "scattering_datum", "solve_lippmann_schwinger",
    "synthesize_backscatter", "synthesize_fixed_angle",
]
