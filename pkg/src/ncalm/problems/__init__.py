"""Problem builders: Mumford-Shah denoising, brittle and cohesive fracture."""

from .base import ConstrainedProblem
from .brittle import EvolutionRecord, assemble_brittle_problem, evolve_brittle, fracture_omega
from .cohesive import (assemble_cohesive_problem, cohesive_displacement,
                       cohesive_reduced_opening)
from .grid import (GridSpec, apply_pseudo_inverse, apply_pseudo_inverse_adjoint,
                   build_curl_constraint, build_grad_operator, line_integrate,
                   pseudo_inverse_operator, reconstruct_image)
from .mumford_shah import (add_noise, assemble_ms_problem, ms_kernel_intersection_dim,
                           ms_reconstruct, synthetic_image)
from ..potentials import cohesive_potential

__all__ = [
    "ConstrainedProblem", "GridSpec", "EvolutionRecord",
    "build_grad_operator", "build_curl_constraint", "apply_pseudo_inverse",
    "apply_pseudo_inverse_adjoint", "pseudo_inverse_operator", "reconstruct_image",
    "line_integrate", "assemble_ms_problem", "ms_reconstruct", "ms_kernel_intersection_dim",
    "synthetic_image", "add_noise", "assemble_brittle_problem", "evolve_brittle",
    "fracture_omega", "cohesive_potential", "assemble_cohesive_problem",
    "cohesive_displacement", "cohesive_reduced_opening",
]
