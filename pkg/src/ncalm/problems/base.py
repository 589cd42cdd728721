"""The constrained problem ``min ||T v - g||^2 + gamma sum_k w_k U(v_k)  s.t.  A v = f``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..linalg import OperatorHandle

__all__ = ["ConstrainedProblem"]


@dataclass(eq=False)
class ConstrainedProblem:
    """Objective data plus a linear constraint.

    ``weights`` holds the per-coordinate multipliers ``w_k`` of the potential
    (all ones when omitted); a zero weight removes the nonconvex term from a
    coordinate entirely.
    """

    T: OperatorHandle
    g: np.ndarray
    A: OperatorHandle
    f: np.ndarray
    gamma: float
    pot: object
    weights: Optional[np.ndarray] = None
    name: str = "problem"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float).ravel()
        self.f = np.asarray(self.f, dtype=float).ravel()
        if self.T.in_dim != self.A.in_dim:
            raise ValueError("T and A must act on the same space")
        if self.g.size != self.T.out_dim:
            raise ValueError(f"datum g has size {self.g.size}, T maps to {self.T.out_dim}")
        if self.f.size != self.A.out_dim:
            raise ValueError(f"datum f has size {self.f.size}, A maps to {self.A.out_dim}")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float).ravel()
            if self.weights.size != self.m or np.any(self.weights < 0):
                raise ValueError("weights must be nonnegative with one entry per coordinate")

    @property
    def m(self) -> int:
        return self.T.in_dim

    @property
    def w(self) -> np.ndarray:
        return np.ones(self.m) if self.weights is None else self.weights

    @property
    def semiconvexity(self) -> float:
        """``gamma max_k w_k |B|``; ``J + omega ||.||^2`` is convex for larger omega."""
        wmax = 1.0 if self.weights is None else float(np.max(self.weights, initial=0.0))
        return self.gamma * wmax * self.pot.curvature_bound

    def residual(self, v) -> np.ndarray:
        return self.T.forward(v) - self.g

    def fidelity(self, v) -> float:
        r = self.residual(v)
        return float(r @ r)

    def penalty(self, v) -> float:
        return float(self.gamma * np.dot(self.w, self.pot.value(v)))

    def energy(self, v) -> float:
        return self.fidelity(v) + self.penalty(v)

    def gradient(self, v) -> np.ndarray:
        """``2 T*(T v - g) + gamma w * U'(v)`` (the smooth, single-valued choice)."""
        return 2.0 * self.T.adjoint(self.residual(v)) + self.gamma * self.w * self.pot.derivative(v)

    def feasibility_gap(self, v) -> float:
        return float(np.linalg.norm(self.A.forward(v) - self.f))

    def with_data(self, **changes) -> "ConstrainedProblem":
        kw = dict(T=self.T, g=self.g, A=self.A, f=self.f, gamma=self.gamma,
                  pot=self.pot, weights=self.weights, name=self.name,
                  meta=dict(self.meta))
        kw.update(changes)
        return ConstrainedProblem(**kw)
