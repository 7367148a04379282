"""thermofold: coupled electro-thermal simulation of self-folding origami."""

__version__ = "0.1.0"

from .actuation import CreaseActuator, bimorph_curvature, stress_free_angle
from .config import EnvConfig, SolverConfig, config_from_dict
from .driver import (CoupledSimulation, Frame, HeatingSchedule,
                     SimulationResult, run_coupled, run_miura_comparison)
from .errors import (AssemblyError, InfeasibleStartError, MeshingError,
                     NonConvergenceError, PatternError, SingularSystemError)
from .meshing import TriMesh, panel_geometry, triangulate
from .model import OrigamiModel, load_model, load_model_file
from .optimize import (DesignBounds, DesignVector, GripperTask,
                       OptimizationTrace, evaluate_design, optimize_gripper)
from .thermal import (ThermalSystem, analytic_1d_temperature, assemble,
                      chain_layer_area, effective_env_thickness,
                      solve_temperature, t3_element_conductance)

__all__ = [
    "CreaseActuator", "bimorph_curvature", "stress_free_angle",
    "EnvConfig", "SolverConfig", "config_from_dict",
    "CoupledSimulation", "Frame", "HeatingSchedule", "SimulationResult",
    "run_coupled", "run_miura_comparison",
    "AssemblyError", "InfeasibleStartError", "MeshingError",
    "NonConvergenceError", "PatternError", "SingularSystemError",
    "TriMesh", "panel_geometry", "triangulate",
    "OrigamiModel", "load_model", "load_model_file",
    "DesignBounds", "DesignVector", "GripperTask", "OptimizationTrace",
    "evaluate_design", "optimize_gripper",
    "ThermalSystem", "analytic_1d_temperature", "assemble",
    "chain_layer_area", "effective_env_thickness", "solve_temperature",
    "t3_element_conductance",
]
