"""Nested augmented-Lagrangian solver for linearly constrained nonconvex problems."""

from .inner import (AugmentedState, InnerSettings, InvalidConfiguration, augmented_loop,
                    fixed_point_step, minimize_augmented)
from .linalg import CgSettings, OperatorHandle, cg_solve, estimate_norm
from .outer import (IterateTrace, SolveResult, SolverConfig, criticality_residual,
                    rescale_problem, solve)
from .potentials import CohesivePotential, SmoothedPotential
from .problems import ConstrainedProblem

__version__ = "0.1.0"

__all__ = [
    "OperatorHandle", "CgSettings", "cg_solve", "estimate_norm",
    "SmoothedPotential", "CohesivePotential", "ConstrainedProblem",
    "InnerSettings", "AugmentedState", "InvalidConfiguration",
    "fixed_point_step", "minimize_augmented", "augmented_loop",
    "SolverConfig", "IterateTrace", "SolveResult", "rescale_problem",
    "criticality_residual", "solve",
]
