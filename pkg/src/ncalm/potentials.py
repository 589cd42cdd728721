"""Scalar potentials: truncated powers, their C1 cubic smoothing, cohesive law.

Every potential here is even and exposes vectorised ``value``,
``derivative`` and ``second_derivative`` together with ``curvature_bound``,
the constant ``|B|`` for which ``U'' >= -2|B|`` holds away from the finitely
many breakpoints. ``gamma * |B|`` is the smallest admissible proximal weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SmoothedPotential",
    "CohesivePotential",
    "ZeroPotential",
    "truncated_power",
    "cubic_coefficients",
    "smoothed_value",
    "smoothed_derivative",
    "omega_lower_bound",
    "cohesive_potential",
]


def truncated_power(t, r: float, p: float):
    """``min(|t|^p, r^p)``."""
    return np.minimum(np.abs(t) ** p, r ** p)


def cubic_coefficients(r: float, eps: float, p: float):
    """Coefficients ``(a3, a2, a0)`` of the cubic bridge over ``[r-eps, r+eps]``.

    The bridge is ``a3 (t - s2)^3 + a2 (t - s2)^2 + a0`` with ``s2 = r + eps``;
    it matches ``t^p`` in value and slope at ``s1 = r - eps`` and the flat cap
    ``r^p`` in value and slope at ``s2``.
    """
    if not 0 < eps < r:
        raise ValueError(f"smoothing width must satisfy 0 < eps < r, got eps={eps}, r={r}")
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got p={p}")
    s1, s2 = r - eps, r + eps
    slope1, val1, val2 = p * s1 ** (p - 1), s1 ** p, r ** p
    d = s2 - s1
    a0 = val2
    a2 = slope1 / d - 3.0 * (val2 - val1) / d ** 2
    a3 = slope1 / (3.0 * d ** 2) + 2.0 * a2 / (3.0 * d)
    return a3, a2, a0


@dataclass(frozen=True)
class SmoothedPotential:
    """``W_r^{p,eps}``: ``|t|^p`` below ``r-eps``, cubic bridge, then ``r^p``."""

    p: float
    r: float
    eps: float
    cubic_a3: float = field(init=False)
    cubic_a2: float = field(init=False)
    cubic_a0: float = field(init=False)

    def __post_init__(self):
        a3, a2, a0 = cubic_coefficients(self.r, self.eps, self.p)
        object.__setattr__(self, "cubic_a3", a3)
        object.__setattr__(self, "cubic_a2", a2)
        object.__setattr__(self, "cubic_a0", a0)

    @property
    def s1(self) -> float:
        return self.r - self.eps

    @property
    def s2(self) -> float:
        return self.r + self.eps

    @property
    def curvature_bound(self) -> float:
        return abs(self.cubic_a2)

    @property
    def cap(self) -> float:
        return self.r ** self.p

    def breakpoints(self):
        return (self.s1, self.s2)

    def value(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        d = a - self.s2
        bridge = self.cubic_a3 * d ** 3 + self.cubic_a2 * d ** 2 + self.cubic_a0
        out = np.where(a <= self.s1, a ** self.p,
                       np.where(a >= self.s2, self.cap, bridge))
        return out if out.ndim else float(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        d = a - self.s2
        bridge = 3 * self.cubic_a3 * d ** 2 + 2 * self.cubic_a2 * d
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.where(a > 0, self.p * a ** (self.p - 1), 0.0)
        mag = np.where(a <= self.s1, inner, np.where(a >= self.s2, 0.0, bridge))
        out = np.sign(t) * mag
        return out if out.ndim else float(out)

    def second_derivative(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        d = a - self.s2
        # at the origin this is inf for 1 < p < 2, which callers only use as a Newton slope
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            inner = self.p * (self.p - 1) * a ** (self.p - 2)
        out = np.where(a <= self.s1, inner,
                       np.where(a >= self.s2, 0.0, 6 * self.cubic_a3 * d + 2 * self.cubic_a2))
        return out if out.ndim else float(out)

    def right_slope_at_zero(self) -> float:
        """``U'(0+)``; positive only for ``p = 1`` (a kink at the origin)."""
        return 1.0 if self.p == 1 else 0.0


@dataclass(frozen=True)
class CohesivePotential:
    """``g(|t|)`` with ``g(s) = s - s^2/(2R)`` for ``s < R`` and ``R/2`` beyond."""

    R: float

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("cohesive length R must be positive")

    @property
    def curvature_bound(self) -> float:
        return 1.0 / (2.0 * self.R)

    def breakpoints(self):
        return (0.0, self.R)

    def value(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        out = np.where(a < self.R, a - a * a / (2 * self.R), self.R / 2)
        return out if out.ndim else float(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        out = np.sign(t) * np.where(a < self.R, 1.0 - a / self.R, 0.0)
        return out if out.ndim else float(out)

    def second_derivative(self, t):
        a = np.abs(np.asarray(t, dtype=float))
        out = np.where(a < self.R, -1.0 / self.R, 0.0)
        return out if out.ndim else float(out)

    def right_slope_at_zero(self) -> float:
        return 1.0


@dataclass(frozen=True)
class ZeroPotential:
    """The zero map, for coordinates carrying no nonconvex term."""

    curvature_bound = 0.0

    def breakpoints(self):
        return ()

    def value(self, t):
        out = np.zeros_like(np.asarray(t, dtype=float))
        return out if out.ndim else 0.0

    derivative = value
    second_derivative = value

    def right_slope_at_zero(self) -> float:
        return 0.0


def cohesive_potential(s, R: float):
    """Cohesive interface law ``g(s)`` for openings ``s >= 0``."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("cohesive opening must be nonnegative")
    return CohesivePotential(R).value(s)


def smoothed_value(pot: SmoothedPotential, t):
    return pot.value(t)


def smoothed_derivative(pot: SmoothedPotential, t):
    """Derivative of the smoothed potential; 0 at the origin when ``p = 1``."""
    return pot.derivative(t)


def omega_lower_bound(pot, gamma: float) -> float:
    """``gamma |B|``: proximal weights above it make the inner problem strongly convex."""
    return gamma * pot.curvature_bound
