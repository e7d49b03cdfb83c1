"""High-fidelity snapshot generators."""
from .advection1d import Advection1dConfig, solve_advection_1d
from .advdiff2d import AdvDiff2dConfig, solve_advdiff_2d
from .linear import LinearSystemConfig, rotation_matrix, solve_linear_system
from .navier_stokes import NavierStokesConfig, simulate_navier_stokes, solve_navier_stokes

__all__ = [
    "Advection1dConfig", "solve_advection_1d",
    "AdvDiff2dConfig", "solve_advdiff_2d",
    "LinearSystemConfig", "rotation_matrix", "solve_linear_system",
    "NavierStokesConfig", "simulate_navier_stokes", "solve_navier_stokes",
]
