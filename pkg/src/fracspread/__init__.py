"""Simulation and bound verification for cooperative reaction-diffusion
systems with fractional diffusion of different orders per component."""

__version__ = "0.1.0"

from fracspread.eigen import EigenPair, coupling_bounds, principal_eigenpair  # noqa: E402
from fracspread.evolve import FieldState, Trajectory, make_initial, simulate, step  # noqa: E402
from fracspread.fronts import exponent_report, level_radius, theoretical_exponent  # noqa: E402
from fracspread.kernels import BACKEND  # noqa: E402
from fracspread.model import ModelSpec, eval_reaction, preset_model, validate_hypotheses  # noqa: E402
from fracspread.spectral import Grid, frac_laplacian, heat_kernel  # noqa: E402

__all__ = [
    "BACKEND",
    "EigenPair",
    "FieldState",
    "Grid",
    "ModelSpec",
    "Trajectory",
    "coupling_bounds",
    "eval_reaction",
    "exponent_report",
    "frac_laplacian",
    "heat_kernel",
    "level_radius",
    "make_initial",
    "preset_model",
    "principal_eigenpair",
    "simulate",
    "step",
    "theoretical_exponent",
    "validate_hypotheses",
]
