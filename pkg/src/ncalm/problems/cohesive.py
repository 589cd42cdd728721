"""One-dimensional cohesive fracture with a single interface at index ``N``.

Unknowns are the increments ``v_i = u_{i+1} - u_i``, ``i = 0..2N-1``, on a
bar of length ``2A`` with mesh ``A h``, ``h = 1/N``. The energy is

    (1/(A h)) sum_{i != N} v_i^2 + g(|v_N|)   subject to   sum_i v_i = u(2A) - u(0).
"""

from __future__ import annotations

import numpy as np

from ..linalg import OperatorHandle, from_matrix
from ..potentials import CohesivePotential
from .base import ConstrainedProblem

__all__ = ["assemble_cohesive_problem", "cohesive_displacement", "cohesive_reduced_opening"]


def assemble_cohesive_problem(N: int, A_len: float, R: float, bc_left: float,
                              bc_right: float) -> ConstrainedProblem:
    if N < 1:
        raise ValueError("need N >= 1 intervals per half")
    if A_len <= 0:
        raise ValueError("half-length A must be positive")
    m = 2 * N
    h = 1.0 / N
    s = 1.0 / np.sqrt(A_len * h)
    mask = np.ones(m)
    mask[N] = 0.0
    T = OperatorHandle(m, m, lambda v: s * mask * v, lambda y: s * mask * y, name="(I-P_N)/sqrt(Ah)")
    T.set_norm(s)
    A = from_matrix(np.ones((1, m)), name="sum")
    A.set_norm(np.sqrt(m))
    weights = np.zeros(m)
    weights[N] = 1.0
    pot = CohesivePotential(R)
    return ConstrainedProblem(T, np.zeros(m), A, np.array([bc_right - bc_left]), 1.0, pot,
                              weights=weights, name=f"cohesive N={N}",
                              meta={"N": N, "A_len": A_len, "h": h, "R": R,
                                    "bc_left": bc_left, "bc_right": bc_right,
                                    "omega_lower_bound": 1.0 / (2.0 * R),
                                    "omega_lower_bound_weighted": 1.0 / (2.0 * A_len * h * R)})


def cohesive_displacement(problem, v) -> np.ndarray:
    """Nodal displacements ``u_0 = bc_left``, ``u_{i+1} = u_i + v_i``."""
    return problem.meta["bc_left"] + np.concatenate([[0.0], np.cumsum(v)])


def cohesive_reduced_opening(N: int, A_len: float, R: float, jump: float) -> float:
    """Interface opening at the symmetric critical point, for ``0 <= jump`` and ``A' < R``.

    With every elastic increment equal, the energy reduces to
    ``(jump - s)^2 / (2 A') + g(s)`` with ``A' = (2N-1) A h / 2``.
    """
    a = (2 * N - 1) * A_len / (2.0 * N)
    if not a < R:
        raise ValueError("reduced problem is not convex in the opening")
    if jump <= a:
        return 0.0
    s = (jump - a) * R / (R - a)
    return s if s < R else jump
