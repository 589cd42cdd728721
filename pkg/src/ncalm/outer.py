"""Outer solver: re-centred proximal augmented Lagrangian with diagnostics.

Outer step ``ell`` takes ``u = v_{ell-1}`` and runs the inner multiplier loop
on ``J + omega ||. - u||^2`` until ``(1 + ||q_{ell-1}||) ||A v - f|| <= ell^(-alpha)``.
Everything runs on a rescaled copy of the problem so that the inner
contraction hypotheses hold; the trace is reported in the original units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .inner import InnerSettings, InvalidConfiguration, augmented_loop, contraction_factor
from .linalg import CgSettings, OperatorHandle, cg_solve, scaled

__all__ = [
    "SolverConfig",
    "ScaleRecord",
    "IterateTrace",
    "SolveResult",
    "SolverDivergence",
    "TRACE_COLUMNS",
    "rescale_problem",
    "select_omega",
    "criticality_residual",
    "solve",
]

TRACE_COLUMNS = ("ell", "feas_gap", "step_norm", "energy", "inner_count", "crit_residual")


class SolverDivergence(RuntimeError):
    """Non-finite iterate; ``trace`` holds the rows recorded before the failure."""

    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


@dataclass(frozen=True)
class SolverConfig:
    """Outer-loop parameters.

    ``omega`` is given in the units of the original problem, ``None`` meaning
    ``omega_margin * gamma max(w) |B|``. ``omega_cap`` is the largest weight
    allowed after rescaling; the objective is shrunk further when needed.
    With ``normalize_constraint`` the constraint is scaled so that
    ``lam ||A'||^2`` sits just below 1 (up or down); otherwise ``A`` is only
    ever shrunk, by ``1.01 max(||A|| sqrt(lam), 1)``.
    """

    alpha: float = 1.5
    omega: Optional[float] = None
    lam: float = 0.5
    max_outer: int = 500
    feas_tol: float = 1e-6
    step_tol: float = 1e-6
    crit_tol: float = 1e-4
    inner: Optional[InnerSettings] = None
    omega_margin: float = 1.0001
    omega_cap: float = 0.9
    normalize_constraint: bool = True
    stall_patience: int = 5
    max_norm: float = 1e6
    crit_cg: CgSettings = CgSettings(tol=1e-12, max_iter=2000)

    def __post_init__(self):
        if not self.alpha > 1:
            raise InvalidConfiguration("alpha must be > 1")
        if self.lam <= 0:
            raise InvalidConfiguration("lambda must be positive")
        if self.omega is not None and self.omega <= 0:
            raise InvalidConfiguration("omega must be positive")
        if self.max_outer < 1:
            raise InvalidConfiguration("max_outer must be >= 1")
        if min(self.feas_tol, self.step_tol, self.crit_tol) < 0:
            raise InvalidConfiguration("tolerances must be nonnegative")
        if not self.omega_margin > 1:
            raise InvalidConfiguration("omega_margin must exceed 1")
        if not 0 < self.omega_cap < 1:
            raise InvalidConfiguration("omega_cap must lie in (0, 1)")
        if self.inner is None:
            object.__setattr__(self, "inner", InnerSettings(lam=self.lam))
        elif self.inner.lam != self.lam:
            raise InvalidConfiguration("inner.lam and lam disagree")


@dataclass(frozen=True)
class ScaleRecord:
    """``T' = T/(c sqrt(kappa))``, ``g' = g/(c sqrt(kappa))``, ``gamma' = gamma/(c^2 kappa)``,
    ``A' = A/c_A``, ``f' = f/c_A``; the scaled objective is ``J/(c^2 kappa)``."""

    c: float
    c_A: float
    kappa: float = 1.0

    @property
    def objective_factor(self) -> float:
        return self.c ** 2 * self.kappa

    def omega_to_original(self, omega_scaled: float) -> float:
        return omega_scaled * self.objective_factor

    def omega_to_scaled(self, omega: float) -> float:
        return omega / self.objective_factor

    def q_to_original(self, q_scaled):
        return np.asarray(q_scaled) * (self.objective_factor / self.c_A)

    def q_to_scaled(self, q):
        return np.asarray(q, dtype=float) * (self.c_A / self.objective_factor)


def _constraint_scale(nA: float, lam: float, normalize: bool) -> float:
    if nA == 0:
        raise InvalidConfiguration("constraint operator is zero")
    if normalize:
        return 1.01 * math.sqrt(lam) * nA
    return 1.01 * max(nA * math.sqrt(lam), 1.0)


def rescale_problem(problem, gamma: Optional[float] = None, lam: float = 0.5,
                    normalize_constraint: bool = False, kappa: float = 1.0):
    """Scale data so that ``||T'|| < 1`` and ``lam ||A'||^2 < 1``.

    With ``lam = 1/2`` and ``normalize_constraint=False`` this is
    ``c = 1.01 max(||T||, 1)`` and ``c_A = 1.01 max(||A||/sqrt(2), 1)``.
    The feasible set and the constrained minimisers are unchanged.
    """
    gamma = problem.gamma if gamma is None else gamma
    if kappa < 1:
        raise InvalidConfiguration("kappa must be >= 1")
    c = 1.01 * max(problem.T.norm_estimate, 1.0)
    c_A = _constraint_scale(problem.A.norm_estimate, lam, normalize_constraint)
    rec = ScaleRecord(c, c_A, kappa)
    s = c * math.sqrt(kappa)
    out = problem.with_data(T=scaled(problem.T, 1.0 / s), g=problem.g / s,
                            A=scaled(problem.A, 1.0 / c_A), f=problem.f / c_A,
                            gamma=gamma / rec.objective_factor)
    out.meta["scale"] = rec
    return out, rec


def select_omega(problem, config: SolverConfig):
    """Return ``(scaled_problem, record, omega_scaled, omega_original)``.

    The original-unit weight is fixed first, then ``kappa`` is chosen so the
    scaled weight stays at or below ``omega_cap``.
    """
    semi = problem.semiconvexity
    base, rec0 = rescale_problem(problem, lam=config.lam,
                                 normalize_constraint=config.normalize_constraint)
    if config.omega is None:
        omega = config.omega_margin * semi if semi > 0 else 0.5 * rec0.objective_factor
    else:
        omega = float(config.omega)
        if not omega > semi:
            raise InvalidConfiguration(f"omega = {omega:.6g} must exceed gamma |B| = {semi:.6g}")
    kappa = max(1.0, omega / (rec0.objective_factor * config.omega_cap))
    if kappa == 1.0:
        scaled_problem, rec = base, rec0
    else:
        scaled_problem, rec = rescale_problem(problem, lam=config.lam,
                                              normalize_constraint=config.normalize_constraint,
                                              kappa=kappa)
    return scaled_problem, rec, rec.omega_to_scaled(omega), omega


def criticality_residual(problem, v, cg: CgSettings = CgSettings(), full_output: bool = False):
    """Distance of ``grad J(v)`` to ``ran(A*)``.

    Solves ``(A A*) w = A xi`` by CG and returns ``||xi - A* w||``; with
    ``full_output`` also the CG convergence flag.
    """
    xi = problem.gradient(np.asarray(v, dtype=float))
    A = problem.A
    AAt = OperatorHandle(A.out_dim, A.out_dim, lambda z: A.forward(A.adjoint(z)),
                         lambda z: A.forward(A.adjoint(z)), name="AA*")
    res = cg_solve(AAt, A.forward(xi), cg)
    value = float(np.linalg.norm(xi - A.adjoint(res.x)))
    return (value, res.converged) if full_output else value


@dataclass
class IterateTrace:
    """Per-outer-step diagnostics (original units) plus inner-loop records."""

    ell: list = field(default_factory=list)
    feas_gap: list = field(default_factory=list)
    step_norm: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    inner_count: list = field(default_factory=list)
    crit_residual: list = field(default_factory=list)
    adpt_bound: list = field(default_factory=list)
    inner_feas: list = field(default_factory=list, repr=False)
    fp_iterations: list = field(default_factory=list, repr=False)
    initial_energy: float = float("nan")
    initial_crit: float = float("nan")

    def __len__(self):
        return len(self.ell)

    def append(self, row: dict):
        for k in TRACE_COLUMNS:
            getattr(self, k).append(row[k])

    def rows(self):
        for i in range(len(self)):
            yield {k: getattr(self, k)[i] for k in TRACE_COLUMNS}


@dataclass
class SolveResult:
    v_final: np.ndarray
    q_final: np.ndarray
    trace: IterateTrace
    status: str
    omega: float = float("nan")
    omega_scaled: float = float("nan")
    scale: Optional[ScaleRecord] = None
    fp_converged: bool = True

    @property
    def outer_iterations(self) -> int:
        return len(self.trace)


def solve(problem, config: SolverConfig = SolverConfig(), v0=None, q0=None,
          sink: Optional[Callable[[dict], None]] = None) -> SolveResult:
    """Run the nested scheme from ``(v0, q0)`` (zeros by default).

    ``q0`` is in original units. Stops with ``converged`` once feasibility,
    step and criticality are all within tolerance, ``stalled`` after
    ``stall_patience`` consecutive inner loops hit their cap, and
    ``max_outer`` otherwise.
    """
    sp, rec, omega_s, omega = select_omega(problem, config)
    delta = contraction_factor(sp, omega_s)
    if not delta < 1:
        raise InvalidConfiguration("inner map is not a contraction")
    m = problem.m
    v = np.zeros(m) if v0 is None else np.array(v0, dtype=float).ravel()
    if v.size != m:
        raise InvalidConfiguration(f"v0 has size {v.size}, expected {m}")
    q_orig = np.zeros(problem.A.out_dim) if q0 is None else np.array(q0, dtype=float).ravel()
    if q_orig.size != problem.A.out_dim:
        raise InvalidConfiguration(f"q0 has size {q_orig.size}, expected {problem.A.out_dim}")
    q = rec.q_to_scaled(q_orig)

    trace = IterateTrace()
    trace.initial_energy = problem.energy(v)
    trace.initial_crit = criticality_residual(problem, v, config.crit_cg)
    status = "max_outer"
    capped_run = 0
    fp_ok = True
    for ell in range(1, config.max_outer + 1):
        bound = ell ** (-config.alpha) / (1.0 + np.linalg.norm(q))
        st = augmented_loop(sp, v, q, ell, config.alpha, omega_s, settings=config.inner, v0=v)
        fp_ok &= st.fp_converged
        row = {
            "ell": ell,
            "feas_gap": problem.feasibility_gap(st.v),
            "step_norm": float(np.linalg.norm(st.v - v)),
            "energy": problem.energy(st.v),
            "inner_count": st.inner_count,
            "crit_residual": criticality_residual(problem, st.v, config.crit_cg),
        }
        vals = [row[k] for k in TRACE_COLUMNS[1:]]
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(st.v))):
            raise SolverDivergence(f"non-finite iterate at outer step {ell}", trace)
        if np.linalg.norm(st.v) > config.max_norm:
            raise SolverDivergence(
                f"iterate norm {np.linalg.norm(st.v):.3g} exceeds {config.max_norm:g} "
                f"at outer step {ell}", trace)
        trace.append(row)
        trace.adpt_bound.append(bound)
        trace.inner_feas.append(st.feas_history)
        trace.fp_iterations.append(st.fp_iterations)
        if sink is not None:
            sink(row)
        v, q = st.v, st.q
        capped_run = capped_run + 1 if st.capped else 0
        if (row["feas_gap"] <= config.feas_tol and row["step_norm"] <= config.step_tol
                and row["crit_residual"] <= config.crit_tol):
            status = "converged"
            break
        if capped_run >= config.stall_patience:
            status = "stalled"
            break
    return SolveResult(v, rec.q_to_original(q), trace, status, omega=omega,
                       omega_scaled=omega_s, scale=rec, fp_converged=fp_ok)
