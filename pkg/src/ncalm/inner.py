"""Inner solver: thresholding fixed-point iteration and the multiplier loop.

For a centre ``u`` and multiplier ``q`` the inner objective is

    J(v) + omega ||v - u||^2 - <q, A v> + lam ||A v - f||^2,

with ``J(v) = ||T v - g||^2 + gamma sum_k w_k U(v_k)``. Adding three
quadratic majorisers, one each for the ``T``, ``A`` and ``omega`` terms,
decouples the coordinates, and the minimiser is the fixed point of

    v <- S( ((3 - omega) v - T*T v - lam A*A v + T*g + lam A*f + A*q/2 + omega u) / 3 )

where ``S`` thresholds coordinate ``k`` with weight ``mu_k = gamma w_k / 3``.
The map is a contraction with factor ``(3 - omega) / (3 - gamma |B|)``
whenever ``||T|| < 1``, ``lam ||A||^2 < 1`` and ``gamma |B| < omega < 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .thresholding import make_prox

__all__ = [
    "InvalidConfiguration",
    "InnerSettings",
    "AugmentedState",
    "FixedPointResult",
    "check_preconditions",
    "contraction_factor",
    "fixed_point_step",
    "minimize_augmented",
    "augmented_loop",
]


class InvalidConfiguration(ValueError):
    """Raised when the data violate the preconditions of the inner iteration."""


@dataclass(frozen=True)
class InnerSettings:
    """Parameters of the inner loop.

    ``round_floor`` sets the smallest step the fixed-point stop test asks
    for, in units of ``eps * (1 + ||v||)``; below that the iteration only
    reshuffles rounding errors.
    """

    lam: float = 0.5
    fixed_point_tol: float = 1e-10
    fixed_point_max_iter: int = 20000
    inner_max_iter: int = 500
    round_floor: float = 64.0

    def __post_init__(self):
        if self.lam <= 0:
            raise InvalidConfiguration("lambda must be positive")
        if self.fixed_point_tol <= 0:
            raise InvalidConfiguration("fixed_point_tol must be positive")
        if self.fixed_point_max_iter < 1 or self.inner_max_iter < 1:
            raise InvalidConfiguration("iteration caps must be >= 1")
        if self.round_floor < 0:
            raise InvalidConfiguration("round_floor must be nonnegative")


@dataclass
class FixedPointResult:
    v: np.ndarray
    iterations: int
    converged: bool
    step_history: list = field(default_factory=list, repr=False)


@dataclass
class AugmentedState:
    v: np.ndarray
    q: np.ndarray
    inner_count: int = 0
    capped: bool = False
    feas_history: list = field(default_factory=list)
    fp_iterations: list = field(default_factory=list)
    fp_converged: bool = True


def check_preconditions(problem, omega: float, gamma: Optional[float] = None,
                        lam: float = 0.5) -> float:
    """Validate the contraction hypotheses and return the factor ``delta``."""
    gamma = problem.gamma if gamma is None else gamma
    nT = problem.T.norm_estimate
    nA = problem.A.norm_estimate
    if nT >= 1:
        raise InvalidConfiguration(f"||T|| = {nT:.6g} must be < 1; rescale the problem first")
    if lam * nA ** 2 >= 1:
        raise InvalidConfiguration(
            f"lambda ||A||^2 = {lam * nA ** 2:.6g} must be < 1; rescale the problem first")
    if not omega < 1:
        raise InvalidConfiguration(f"omega = {omega:.6g} must be < 1")
    return contraction_factor(problem, omega, gamma)


def contraction_factor(problem, omega: float, gamma: Optional[float] = None) -> float:
    gamma = problem.gamma if gamma is None else gamma
    wmax = float(np.max(problem.w, initial=0.0))
    semi = gamma * wmax * problem.pot.curvature_bound
    if not omega > semi:
        raise InvalidConfiguration(
            f"omega = {omega:.6g} must exceed gamma |B| = {semi:.6g}")
    return (3.0 - omega) / (3.0 - semi)


class _Step:
    """The affine-plus-threshold map with its constant part precomputed."""

    def __init__(self, problem, u, q, omega, gamma, lam):
        self.T, self.A = problem.T, problem.A
        self.omega, self.lam = omega, lam
        self.has_T = problem.T.norm_estimate > 0
        self.shrink = make_prox(problem.pot, gamma * problem.w / 3.0, problem.m)
        self.const = (problem.T.adjoint(problem.g) + lam * problem.A.adjoint(problem.f)
                      + 0.5 * problem.A.adjoint(q) + omega * np.asarray(u, dtype=float))

    def __call__(self, v):
        xi = (3.0 - self.omega) * v - self.lam * self.A.adjoint(self.A.forward(v)) + self.const
        if self.has_T:
            xi -= self.T.adjoint(self.T.forward(v))
        return self.shrink(xi / 3.0)


def fixed_point_step(problem, v, q, u, omega: float, gamma: Optional[float] = None,
                     lam: float = 0.5) -> np.ndarray:
    """One thresholding step towards the minimiser of the inner objective."""
    gamma = problem.gamma if gamma is None else gamma
    check_preconditions(problem, omega, gamma, lam)
    return _Step(problem, u, q, omega, gamma, lam)(np.asarray(v, dtype=float))


def minimize_augmented(problem, u, q, omega: float, gamma: Optional[float] = None,
                       settings: InnerSettings = InnerSettings(), v0=None,
                       record_steps: bool = False) -> FixedPointResult:
    """Iterate the fixed-point map until the contraction bound certifies the tolerance.

    The loop stops once ``||v^{n+1} - v^n|| <= tol (1 - delta) / delta``, which
    implies ``||v^{n+1} - v*|| <= tol``. That threshold is raised to the
    rounding floor ``round_floor * eps * (1 + ||v||)`` when it falls below it.
    """
    gamma = problem.gamma if gamma is None else gamma
    delta = check_preconditions(problem, omega, gamma, settings.lam)
    step = _Step(problem, u, q, omega, gamma, settings.lam)
    v = np.array(u if v0 is None else v0, dtype=float)
    target = settings.fixed_point_tol * (1.0 - delta) / delta
    floor_unit = settings.round_floor * np.finfo(float).eps
    history = []
    for n in range(1, settings.fixed_point_max_iter + 1):
        v_new = step(v)
        dv = v_new - v
        d = math.sqrt(dv @ dv)
        v = v_new
        if record_steps:
            history.append(d)
        if not math.isfinite(d):
            return FixedPointResult(v, n, False, history)
        if d <= target or d <= floor_unit * (1.0 + math.sqrt(v @ v)):
            return FixedPointResult(v, n, True, history)
    return FixedPointResult(v, settings.fixed_point_max_iter, False, history)


def augmented_loop(problem, u, q0, ell: int, alpha: float, omega: float,
                   gamma: Optional[float] = None,
                   settings: InnerSettings = InnerSettings(), v0=None) -> AugmentedState:
    """Multiplier updates ``q <- q + 2 lam (f - A v)`` until the adaptive stop holds.

    The stop test is ``(1 + ||q0||) ||A v - f|| <= ell^(-alpha)``, evaluated
    after every primal solve; ``inner_count`` is the number of multiplier
    updates performed, the last one included.
    """
    if alpha <= 1:
        raise InvalidConfiguration("alpha must be > 1")
    if ell < 1:
        raise InvalidConfiguration("outer index ell must be >= 1")
    q = np.array(q0, dtype=float)
    bound = float(ell) ** (-alpha) / (1.0 + np.linalg.norm(q))
    state = AugmentedState(v=np.array(u if v0 is None else v0, dtype=float), q=q)
    for k in range(1, settings.inner_max_iter + 1):
        res = minimize_augmented(problem, u, state.q, omega, gamma, settings, v0=state.v)
        state.v = res.v
        state.fp_iterations.append(res.iterations)
        state.fp_converged &= res.converged
        r = problem.f - problem.A.forward(state.v)
        state.q = state.q + 2.0 * settings.lam * r
        gap = float(np.linalg.norm(r))
        state.feas_history.append(gap)
        state.inner_count = k
        if gap <= bound or not np.isfinite(gap):
            return state
    state.capped = True
    return state
