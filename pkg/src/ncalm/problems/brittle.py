"""One-dimensional brittle fracture under a displacement load and its evolution.

A bar ``[0, 1]`` split in ``N`` intervals of width ``h`` carries the
displacements ``-t`` and ``t`` at its ends. With ``v`` the interval slopes
the energy is ``gamma sum_i h W(v_i)`` subject to ``sum_i h v_i = 2t``; there
is no fidelity term.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..linalg import from_matrix, zero
from ..outer import SolverConfig, SolverDivergence, solve
from ..potentials import SmoothedPotential
from .base import ConstrainedProblem
from .grid import GridSpec, line_integrate

__all__ = ["assemble_brittle_problem", "evolve_brittle", "EvolutionRecord", "fracture_omega"]


def assemble_brittle_problem(grid: GridSpec, t: float, gamma: float, r: float, eps: float,
                             h_weighted: bool = True, p: float = 2) -> ConstrainedProblem:
    """``T = 0``, ``A = (h, ..., h)``, ``f = 2t``; potential weights ``h`` (or 1)."""
    N, h = grid.n, grid.h
    pot = SmoothedPotential(p, r, eps)
    A = from_matrix(np.full((1, N), h), name="h*sum")
    A.set_norm(h * np.sqrt(N))
    w = np.full(N, h if h_weighted else 1.0)
    return ConstrainedProblem(zero(N, 1), np.zeros(1), A, np.array([2.0 * t]), gamma, pot,
                              weights=w, name=f"brittle N={N} t={t:g}",
                              meta={"grid": grid, "t": t})


def fracture_omega(N_points: int, r: float, eps: float) -> float:
    """Reference weight ``(1/2)(1/2 + r / ((N - 1) eps))``, ``N`` the number of nodes."""
    return 0.5 * (0.5 + r / ((N_points - 1) * eps))


@dataclass
class EvolutionRecord:
    t: list = field(default_factory=list)
    v: list = field(default_factory=list, repr=False)
    u: list = field(default_factory=list, repr=False)
    energy: list = field(default_factory=list)
    status: list = field(default_factory=list)
    outer_iterations: list = field(default_factory=list)
    feas_gap: list = field(default_factory=list)
    crit_residual: list = field(default_factory=list)
    wall_seconds: list = field(default_factory=list)
    failed: list = field(default_factory=list)

    def __len__(self):
        return len(self.t)

    @property
    def rupture_flags(self) -> list:
        """Step ``k`` is flagged when the energy falls below half of step ``k-1``."""
        e = self.energy
        return [k > 0 and e[k] < 0.5 * e[k - 1] for k in range(len(e))]

    @property
    def rupture_time(self):
        for k, flag in enumerate(self.rupture_flags):
            if flag:
                return self.t[k]
        return None


def evolve_brittle(grid: GridSpec, dt: float, t_end: float, gamma: float, r: float,
                   eps: float, config: SolverConfig = SolverConfig(), warm_start: bool = True,
                   perturbation: float = 1e-8, seed: int = 0, h_weighted: bool = True,
                   t_start: float = None) -> EvolutionRecord:
    """Quasi-static loading ``t_k = k dt`` up to ``t_end``.

    Each step starts from the previous slopes (or from zero without warm
    start). A uniform field is an exact critical point whose symmetry the
    iteration preserves, so the start receives a zero-sum kick of size
    ``perturbation`` at one interval drawn once from ``seed``.
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    N = grid.n
    site = int(np.random.default_rng(seed).integers(N))
    kick = np.full(N, -perturbation / max(N - 1, 1))
    kick[site] = perturbation
    if N == 1:
        kick[:] = 0.0
    k0 = 1 if t_start is None else max(1, int(round(t_start / dt)))
    n_steps = int(np.floor(t_end / dt + 1e-9))
    rec = EvolutionRecord()
    v = np.zeros(N)
    for k in range(k0, n_steps + 1):
        t = k * dt
        prob = assemble_brittle_problem(grid, t, gamma, r, eps, h_weighted=h_weighted)
        start = (v if warm_start else np.zeros(N)) + kick
        t0 = time.perf_counter()
        try:
            res = solve(prob, config, v0=start)
            v, status, failed = res.v_final, res.status, False
            n_outer = len(res.trace)
            feas, crit = res.trace.feas_gap[-1], res.trace.crit_residual[-1]
        except SolverDivergence as exc:
            status, failed, n_outer = f"failed: {exc}", True, len(exc.trace)
            feas = crit = float("nan")
        rec.wall_seconds.append(time.perf_counter() - t0)
        rec.t.append(t)
        rec.v.append(v.copy())
        rec.u.append(line_integrate(v, -t, grid.h))
        rec.energy.append(prob.energy(v))
        rec.status.append(status)
        rec.outer_iterations.append(n_outer)
        rec.feas_gap.append(feas)
        rec.crit_residual.append(crit)
        rec.failed.append(failed)
    return rec
