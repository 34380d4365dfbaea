"""Modal LQR and LQG design for a bending-torsion beam with unsteady aerodynamic lag states."""

from .aero import AeroParameters, JonesModel, build_combined
from .config import RunConfig
from .kalman import NoiseSpec, assemble_compensator, design_filter
from .modal import BeamParameters, build_basis, find_bending_roots
from .riccati import WeightSpec, run_policy_iteration, solve_are
from .sim import SimConfig, integrate, run_scenario
from .statespace import build_modal_system, example_system

__all__ = [
    "AeroParameters",
    "BeamParameters",
    "JonesModel",
    "NoiseSpec",
    "RunConfig",
    "SimConfig",
    "WeightSpec",
    "assemble_compensator",
    "build_basis",
    "build_combined",
    "build_modal_system",
    "design_filter",
    "example_system",
    "find_bending_roots",
    "integrate",
    "run_policy_iteration",
    "run_scenario",
    "solve_are",
]

__version__ = "0.1.0"
