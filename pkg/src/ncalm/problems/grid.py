"""Grid difference operators, the discrete curl, and gradient pseudo-inverses.

Layout on an ``n x n`` grid: the image ``u`` is flattened row-major with the
first index slow. ``D_h u`` stacks the differences along the first index,
an ``(n-1) x n`` block, on top of those along the second index, an
``n x (n-1)`` block, both flattened row-major and divided by ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft

from ..linalg import CgSettings, OperatorHandle, cg_solve

__all__ = [
    "GridSpec",
    "GridOperator",
    "build_grad_operator",
    "build_curl_constraint",
    "build_laplacian",
    "laplacian_pinv",
    "apply_pseudo_inverse",
    "apply_pseudo_inverse_adjoint",
    "pseudo_inverse_operator",
    "reconstruct_image",
    "line_integrate",
]

PINV_CG = CgSettings(tol=1e-13, max_iter=5000)


@dataclass(frozen=True)
class GridSpec:
    """``n`` points per side in 2D, or ``n`` intervals in 1D; ``h`` defaults to ``1/n``."""

    n: int
    h: Optional[float] = None
    dim: int = 2

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        if self.n < (2 if self.dim == 2 else 1):
            raise ValueError(f"grid needs n >= 2 in 2D (n >= 1 in 1D), got {self.n}")
        if self.h is None:
            object.__setattr__(self, "h", 1.0 / self.n)
        if self.h <= 0:
            raise ValueError("mesh size must be positive")

    @property
    def n_pixels(self) -> int:
        return self.n * self.n

    @property
    def n_edges(self) -> int:
        return 2 * self.n * (self.n - 1)

    @property
    def n_cells(self) -> int:
        return (self.n - 1) ** 2


@dataclass(eq=False)
class GridOperator(OperatorHandle):
    grid: Optional[GridSpec] = None


def _split(v, n):
    k = (n - 1) * n
    return v[:k].reshape(n - 1, n), v[k:].reshape(n, n - 1)


def build_grad_operator(grid: GridSpec) -> GridOperator:
    n, h = grid.n, grid.h

    def fwd(u):
        U = np.asarray(u, dtype=float).reshape(n, n)
        return np.concatenate([np.diff(U, axis=0).ravel(), np.diff(U, axis=1).ravel()]) / h

    def adj(v):
        px, py = _split(np.asarray(v, dtype=float), n)
        U = np.zeros((n, n))
        U[1:, :] += px
        U[:-1, :] -= px
        U[:, 1:] += py
        U[:, :-1] -= py
        return U.ravel() / h

    op = GridOperator(grid.n_pixels, grid.n_edges, fwd, adj, name="D_h", grid=grid)
    op.set_norm(np.sqrt(8.0) * np.sin(np.pi * (n - 1) / (2 * n)) / h)
    return op


def build_curl_constraint(grid: GridSpec) -> GridOperator:
    """Per-cell circulation of an edge field; its kernel is exactly ``ran(D_h)``."""
    n = grid.n

    def fwd(v):
        px, py = _split(np.asarray(v, dtype=float), n)
        return (px[:, :-1] + py[1:, :] - px[:, 1:] - py[:-1, :]).ravel()

    def adj(c):
        C = np.asarray(c, dtype=float).reshape(n - 1, n - 1)
        px = np.zeros((n - 1, n))
        py = np.zeros((n, n - 1))
        px[:, :-1] += C
        px[:, 1:] -= C
        py[1:, :] += C
        py[:-1, :] -= C
        return np.concatenate([px.ravel(), py.ravel()])

    return GridOperator(grid.n_edges, grid.n_cells, fwd, adj, name="curl", grid=grid)


def build_laplacian(grid: GridSpec) -> GridOperator:
    """``D_h* D_h``, the Neumann Laplacian on pixels (constants in its kernel)."""
    D = build_grad_operator(grid)
    return GridOperator(grid.n_pixels, grid.n_pixels, lambda u: D.adjoint(D.forward(u)),
                        lambda u: D.adjoint(D.forward(u)), name="D*D", grid=grid)


def _zero_mean(u):
    return u - u.mean()


def _laplacian_eigenvalues(grid: GridSpec) -> np.ndarray:
    k = np.arange(grid.n)
    lam1 = 4.0 * np.sin(np.pi * k / (2 * grid.n)) ** 2
    return (lam1[:, None] + lam1[None, :]) / grid.h ** 2


def laplacian_pinv(grid: GridSpec, u, method: str = "dct",
                   cg: CgSettings = PINV_CG):
    """Zero-mean solution of ``D_h* D_h x = u - mean(u)``.

    ``method="cg"`` runs conjugate gradients restricted to mean-zero vectors;
    ``method="dct"`` diagonalises the Neumann Laplacian with the orthonormal
    type-II cosine transform, which solves the same system exactly.
    Returns ``(x, converged, residual)``.
    """
    u = np.asarray(u, dtype=float)
    if method == "dct":
        lam = _laplacian_eigenvalues(grid)
        lam[0, 0] = np.inf
        c = fft.dctn(u.reshape(grid.n, grid.n), type=2, norm="ortho")
        x = fft.idctn(c / lam, type=2, norm="ortho").ravel()
        return x - x.mean(), True, 0.0
    if method == "cg":
        res = cg_solve(build_laplacian(grid), u, cg, project=_zero_mean)
        return res.x, res.converged, res.residual
    raise ValueError(f"unknown pseudo-inverse method {method!r}")


def _grid_of(Dh) -> GridSpec:
    grid = getattr(Dh, "grid", None)
    if grid is None:
        raise ValueError("operator carries no grid; build it with build_grad_operator")
    return grid


def apply_pseudo_inverse(Dh: GridOperator, v, cg: CgSettings = PINV_CG,
                         method: str = "cg", full_output: bool = False):
    """``D_h^+ v``: the mean-zero solution of ``(D_h* D_h) u = D_h* v``."""
    x, ok, res = laplacian_pinv(_grid_of(Dh), Dh.adjoint(v), method, cg)
    return (x, ok, res) if full_output else x


def apply_pseudo_inverse_adjoint(Dh: GridOperator, u, cg: CgSettings = PINV_CG,
                                 method: str = "cg", full_output: bool = False):
    """``(D_h^+)* u``: the curl-free solution of ``(D_h D_h*) v = D_h u``.

    Uses ``(D^+)* = D (D* D)^+``, so the result lies in ``ran(D_h)`` by
    construction and only a pixel-space Laplacian solve is needed.
    """
    x, ok, res = laplacian_pinv(_grid_of(Dh), u, method, cg)
    v = Dh.forward(x)
    return (v, ok, res) if full_output else v


def pseudo_inverse_operator(Dh: GridOperator, method: str = "dct",
                            cg: CgSettings = PINV_CG) -> GridOperator:
    """``D_h^+`` as an operator handle with its exact norm ``1 / sigma_min(D_h)``."""
    grid = _grid_of(Dh)
    op = GridOperator(grid.n_edges, grid.n_pixels,
                      lambda v: apply_pseudo_inverse(Dh, v, cg, method),
                      lambda u: apply_pseudo_inverse_adjoint(Dh, u, cg, method),
                      name="D_h^+", grid=grid)
    op.set_norm(grid.h / (2.0 * np.sin(np.pi / (2 * grid.n))))
    return op


def reconstruct_image(v, c_g: float, grid: GridSpec, cg: CgSettings = PINV_CG,
                      method: str = "dct") -> np.ndarray:
    """``D_h^+ v + c_g`` reshaped to ``n x n``."""
    Dh = build_grad_operator(grid)
    u = apply_pseudo_inverse(Dh, v, cg, method)
    return (u + c_g).reshape(grid.n, grid.n)


def line_integrate(v, boundary_value: float, h: float = None) -> np.ndarray:
    """Nodal values ``u_0 = b``, ``u_i = u_{i-1} + h v_{i-1}`` from interval slopes."""
    v = np.asarray(v, dtype=float)
    if h is None:
        h = 1.0 / v.size
    return boundary_value + np.concatenate([[0.0], np.cumsum(h * v)])
