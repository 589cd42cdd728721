"""Matrix-free linear operators, conjugate gradients and norm estimation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "OperatorHandle",
    "CgSettings",
    "CgResult",
    "adjoint_check",
    "estimate_norm",
    "cg_solve",
    "from_matrix",
    "identity",
    "zero",
    "scaled",
    "stack",
]

Vector = np.ndarray
LinearMap = Callable[[Vector], Vector]


@dataclass(eq=False)
class OperatorHandle:
    """A linear map given by its forward and adjoint actions.

    The operator norm is estimated lazily by power iteration the first time
    :attr:`norm_estimate` is read and cached afterwards.
    """

    in_dim: int
    out_dim: int
    forward: LinearMap
    adjoint: LinearMap
    name: str = "op"
    _norm: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("operator dimensions must be positive")

    def __call__(self, x: Vector) -> Vector:
        return self.forward(x)

    @property
    def T(self) -> "OperatorHandle":
        return OperatorHandle(self.out_dim, self.in_dim, self.adjoint,
                              self.forward, name=self.name + "*",
                              _norm=self._norm)

    @property
    def norm_estimate(self) -> float:
        if self._norm is None:
            self._norm = estimate_norm(self)
        return self._norm

    def set_norm(self, value: float) -> None:
        """Override the cached norm, e.g. with an analytically known value."""
        self._norm = float(value)

    def to_dense(self) -> np.ndarray:
        """Assemble the matrix column by column. Meant for small test oracles."""
        cols = [self.forward(e) for e in np.eye(self.in_dim)]
        return np.array(cols).T.reshape(self.out_dim, self.in_dim)


@dataclass(frozen=True)
class CgSettings:
    tol: float = 1e-12
    max_iter: int = 1000

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError("CG tolerance must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("CG max_iter must be >= 1")


@dataclass
class CgResult:
    x: Vector
    converged: bool
    iterations: int
    residual: float
    residual_history: list = field(default_factory=list, repr=False)


def from_matrix(M, name: str = "matrix") -> OperatorHandle:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    Mt = M.T.copy()
    return OperatorHandle(M.shape[1], M.shape[0], lambda x: M @ x,
                          lambda y: Mt @ y, name=name)


def identity(n: int, scale: float = 1.0) -> OperatorHandle:
    op = OperatorHandle(n, n, lambda x: scale * x, lambda y: scale * y,
                        name="identity" if scale == 1.0 else f"{scale}*identity")
    op.set_norm(abs(scale))
    return op


def zero(in_dim: int, out_dim: int) -> OperatorHandle:
    op = OperatorHandle(in_dim, out_dim, lambda x: np.zeros(out_dim),
                        lambda y: np.zeros(in_dim), name="zero")
    op.set_norm(0.0)
    return op


def scaled(op: OperatorHandle, c: float) -> OperatorHandle:
    """Return ``c * op``; the cached norm is carried over."""
    out = OperatorHandle(op.in_dim, op.out_dim, lambda x: c * op.forward(x),
                         lambda y: c * op.adjoint(y),
                         name=f"{c:g}*{op.name}")
    if op._norm is not None:
        out.set_norm(abs(c) * op._norm)
    return out


def stack(*ops: OperatorHandle) -> OperatorHandle:
    """Vertical concatenation ``[op1; op2; ...]`` of maps sharing a domain."""
    n = ops[0].in_dim
    if any(op.in_dim != n for op in ops):
        raise ValueError("stacked operators must share their input dimension")
    splits = np.cumsum([op.out_dim for op in ops])[:-1]

    def fwd(x):
        return np.concatenate([op.forward(x) for op in ops])

    def adj(y):
        return sum(op.adjoint(part) for op, part in zip(ops, np.split(y, splits)))

    return OperatorHandle(n, int(sum(op.out_dim for op in ops)), fwd, adj,
                          name="[" + ";".join(op.name for op in ops) + "]")


def _unit(rng: np.random.Generator, n: int) -> Vector:
    x = rng.standard_normal(n)
    return x / np.linalg.norm(x)


def adjoint_check(op: OperatorHandle, trials: int = 10, seed: int = 0) -> float:
    """Largest ``|<A x, y> - <x, A* y>|`` over random unit vectors ``x, y``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = _unit(rng, op.in_dim)
        y = _unit(rng, op.out_dim)
        d = abs(np.dot(op.forward(x), y) - np.dot(x, op.adjoint(y)))
        worst = max(worst, float(d))
    return worst


def estimate_norm(op: OperatorHandle, iters: int = 500, seed: int = 0,
                  rtol: float = 1e-12) -> float:
    """Estimate ``||op||`` by power iteration on ``op op*``.

    Returns a lower bound of the true norm (up to rounding). The iteration
    exits early once the Rayleigh quotient stagnates to relative ``rtol``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    y = _unit(rng, op.out_dim)
    sigma = 0.0
    for _ in range(iters):
        x = op.adjoint(y)
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return 0.0
        z = op.forward(x / nx)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        # ||A A* y|| / ||A* y|| with ||y|| = 1 approaches sigma_max from below
        new = float(nz)
        y = z / nz
        if abs(new - sigma) <= rtol * new:
            sigma = new
            break
        sigma = new
    return sigma


def cg_solve(op_spd: OperatorHandle, rhs: Vector, settings: CgSettings = CgSettings(),
             x0: Optional[Vector] = None,
             project: Optional[LinearMap] = None,
             method: str = "cg") -> CgResult:
    """Krylov solve of a symmetric positive (semi)definite system.

    ``method="cg"`` is plain conjugate gradients, whose error decreases
    monotonically in the energy norm. ``method="cr"`` is the conjugate
    residual variant, whose residual 2-norm is monotone.

    ``project``, when given, is an orthogonal projector onto an invariant
    subspace on which ``op_spd`` is definite; the right-hand side, the start
    vector and every search direction are kept inside that subspace, which
    is how singular systems with known kernel are handled.
    """
    if method not in ("cg", "cr"):
        raise ValueError(f"unknown Krylov method {method!r}")
    P = project if project is not None else (lambda z: z)
    b = P(np.asarray(rhs, dtype=float))
    x = np.zeros_like(b) if x0 is None else P(np.array(x0, dtype=float))
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CgResult(np.zeros_like(b), True, 0, 0.0, [0.0])
    target = settings.tol * bnorm
    r = P(b - op_spd.forward(x))
    p = r.copy()
    history = [float(np.linalg.norm(r))]
    it = 0
    if method == "cg":
        rr = float(r @ r)
        while np.sqrt(rr) > target and it < settings.max_iter:
            Ap = P(op_spd.forward(p))
            pAp = float(p @ Ap)
            if pAp <= 0.0:
                break
            a = rr / pAp
            x += a * p
            r -= a * Ap
            rr_new = float(r @ r)
            p = r + (rr_new / rr) * p
            rr = rr_new
            it += 1
            history.append(np.sqrt(rr))
    else:
        Ar = P(op_spd.forward(r))
        Ap = Ar.copy()
        rAr = float(r @ Ar)
        while history[-1] > target and it < settings.max_iter:
            ApAp = float(Ap @ Ap)
            if ApAp == 0.0 or rAr <= 0.0:
                break
            a = rAr / ApAp
            x += a * p
            r -= a * Ap
            Ar = P(op_spd.forward(r))
            rAr_new = float(r @ Ar)
            beta = rAr_new / rAr
            p = r + beta * p
            Ap = Ar + beta * Ap
            rAr = rAr_new
            it += 1
            history.append(float(np.linalg.norm(r)))
    res = float(np.linalg.norm(b - P(op_spd.forward(x))))
    return CgResult(x, bool(history[-1] <= target), it, res, history)
