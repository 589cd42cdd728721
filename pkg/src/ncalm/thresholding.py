"""Thresholding maps: the proximity operator of ``mu * U`` for even potentials.

``S(xi) = argmin_t (t - xi)^2 + mu U(t)`` is single valued and Lipschitz with
constant ``1 / (1 - mu |B|)`` as soon as ``mu |B| < 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potentials import CohesivePotential, SmoothedPotential, ZeroPotential

__all__ = ["ThresholdParams", "threshold", "threshold_vector", "prox", "make_prox", "ROOT_TOL"]

ROOT_TOL = 1e-12


@dataclass(frozen=True)
class ThresholdParams:
    mu: float
    pot: object

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("threshold weight mu must be positive")
        if self.mu * self.pot.curvature_bound >= 1:
            raise ValueError(
                f"mu*|B| = {self.mu * self.pot.curvature_bound:.6g} >= 1: "
                "the thresholding objective is not strongly convex")

    @property
    def lipschitz(self) -> float:
        return 1.0 / (1.0 - self.mu * self.pot.curvature_bound)


def threshold(params: ThresholdParams, xi: float) -> float:
    """Minimiser of ``(t - xi)^2 + mu U(t)`` for a scalar ``xi``."""
    return float(prox(params.pot, params.mu, np.array([float(xi)]))[0])


def threshold_vector(params: ThresholdParams, xi) -> np.ndarray:
    return prox(params.pot, params.mu, np.asarray(xi, dtype=float))


def prox(pot, mu, xi: np.ndarray) -> np.ndarray:
    """Componentwise thresholding; ``mu`` may be a scalar or a per-entry array.

    Entries with ``mu == 0`` are returned unchanged. No validity check is done
    here, callers are expected to have enforced ``mu |B| < 1``.
    """
    xi = np.asarray(xi, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), xi.shape)
    if isinstance(pot, ZeroPotential):
        return xi.copy()
    sign = np.sign(xi)
    a = np.abs(xi)
    if isinstance(pot, SmoothedPotential):
        mag = _smoothed_magnitude(pot, mu, a)
    elif isinstance(pot, CohesivePotential):
        mag = _cohesive_magnitude(pot, mu, a)
    else:
        mag = _bisect_magnitude(pot, mu, a)
    return np.where(mu > 0, sign * mag, xi)


def make_prox(pot, mu, size: int):
    """Return ``xi -> prox(pot, mu, xi)`` with the per-entry constants precomputed.

    Meant for loops that threshold many vectors with the same weights; the
    result agrees with :func:`prox` entry for entry.
    """
    mu = np.array(np.broadcast_to(np.asarray(mu, dtype=float), (size,)))
    if isinstance(pot, ZeroPotential) or not np.any(mu > 0):
        return lambda xi: np.array(xi, dtype=float)
    if isinstance(pot, SmoothedPotential) and pot.p == 2 and np.all(mu > 0):
        r, eps = pot.r, pot.eps
        if np.all((r - eps) * (1 + mu) <= r + eps):
            lo_thr = (r - eps) * (1 + mu)
            inv = 1.0 / (1 + mu)
            k = mu / (4 * eps)
            scale = 4 * eps / (3 * mu)
            c0 = scale * (1 + k * (2 * eps + r))
            g0 = 1 + k ** 2 * (2 * r + eps) ** 2 + 2 * k * (r + 2 * eps)
            g1 = 6 * k
            hi_thr = r + eps

            def fast(xi):
                a = np.abs(xi)
                mid = c0 - scale * np.sqrt(np.maximum(g0 - g1 * a, 0.0))
                mag = np.where(a < lo_thr, a * inv, np.where(a > hi_thr, a, mid))
                return np.copysign(mag, xi)

            return fast
    return lambda xi: prox(pot, mu, xi)


def _smoothed_magnitude(pot: SmoothedPotential, mu, a):
    if pot.p != 2:
        return _bisect_magnitude(pot, mu, a)
    r, eps = pot.r, pot.eps
    ordered = (r - eps) * (1 + mu) <= r + eps
    out = np.empty_like(a)
    lo = a < (r - eps) * (1 + mu)
    hi = a > r + eps
    mid = ~(lo | hi)
    out[lo] = a[lo] / (1 + mu[lo])
    out[hi] = a[hi]
    if np.any(mid):
        m, x = mu[mid], a[mid]
        k = m / (4 * eps)
        gam = 4 * (1 + k ** 2 * (2 * r + eps) ** 2 + 2 * k * (r + 2 * eps) - 6 * k * x)
        out[mid] = (4 * eps / (3 * m)) * (1 + k * (2 * eps + r) - np.sqrt(np.maximum(gam, 0.0) / 4))
    bad = ~ordered
    if np.any(bad):
        out[bad] = _bisect_magnitude(pot, mu[bad], a[bad])
    return out


def _cohesive_magnitude(pot: CohesivePotential, mu, a):
    R = pot.R
    return np.where(a <= mu / 2, 0.0,
                    np.where(a >= R, a, (a - mu / 2) / (1 - mu / (2 * R))))


def _bisect_magnitude(pot, mu, a, tol: float = ROOT_TOL):
    """Root of ``2 (t - a) + mu U'(t)`` on ``[0, a]`` for ``a >= 0``.

    The stationarity function is strictly increasing, negative at ``0+``
    (outside the dead zone ``a <= mu U'(0+)/2``) and nonnegative at ``a``.
    Bisection brackets the root; one guarded Newton step polishes it.
    """
    a = np.asarray(a, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), a.shape)
    lo = np.zeros_like(a)
    hi = a.copy()
    dead = 2 * a <= mu * pot.right_slope_at_zero()

    def phi(t):
        return 2 * (t - a) + mu * pot.derivative(t)

    width_tol = 0.25 * tol
    for _ in range(200):
        if np.all(hi - lo <= width_tol):
            break
        mid = 0.5 * (lo + hi)
        neg = phi(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    t = 0.5 * (lo + hi)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = 2 + mu * pot.second_derivative(t)
        step = phi(t) / slope
    newton = t - step
    ok = np.isfinite(newton) & (newton >= lo) & (newton <= hi)
    t = np.where(ok, newton, t)
    return np.where(dead, 0.0, t)
