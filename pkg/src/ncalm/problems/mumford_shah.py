"""Discrete Mumford-Shah denoising posed on the gradient field.

With ``v = D_h u`` the discrete functional becomes

    ||D_h^+ v - g~||^2 + gamma sum_k W(v_k)   subject to   curl v = 0,

where ``g~ = D_h^+ D_h g`` is the mean-free part of the datum. The common
factor ``h^2`` multiplies every term and is kept only as ``meta["h2"]``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import null_space

from ..potentials import SmoothedPotential
from .base import ConstrainedProblem
from .grid import (GridSpec, build_curl_constraint, build_grad_operator,
                   pseudo_inverse_operator, reconstruct_image)

__all__ = ["assemble_ms_problem", "ms_kernel_intersection_dim", "synthetic_image",
           "add_noise", "ms_reconstruct"]


def assemble_ms_problem(image_g, gamma: float, r: float, eps: float,
                        grid: GridSpec = None, p: float = 2, pinv_method: str = "dct"):
    """Build the constrained gradient-field problem for an ``n x n`` image."""
    img = np.asarray(image_g, dtype=float)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ValueError(f"Mumford-Shah grid needs a square image, got shape {img.shape}")
    if grid is None:
        grid = GridSpec(img.shape[0])
    if grid.n != img.shape[0]:
        raise ValueError("grid size does not match the image")
    pot = SmoothedPotential(p, r, eps)
    Dh = build_grad_operator(grid)
    T = pseudo_inverse_operator(Dh, method=pinv_method)
    c_g = float(img.mean())
    g_tilde = img.ravel() - c_g
    A = build_curl_constraint(grid)
    return ConstrainedProblem(T, g_tilde, A, np.zeros(A.out_dim), gamma, pot,
                              name=f"mumford-shah {grid.n}x{grid.n}",
                              meta={"grid": grid, "c_g": c_g, "h2": grid.h ** 2,
                                    "Dh": Dh, "image": img})


def ms_reconstruct(problem, v) -> np.ndarray:
    grid = problem.meta["grid"]
    return reconstruct_image(v, problem.meta["c_g"], grid)


def ms_kernel_intersection_dim(grid: GridSpec) -> int:
    """``dim(ker T  cap  ker A)`` from dense matrices; meant for small grids."""
    Dh = build_grad_operator(grid)
    T = pseudo_inverse_operator(Dh).to_dense()
    A = build_curl_constraint(grid).to_dense()
    return null_space(np.vstack([T, A])).shape[1]


def synthetic_image(n: int, kind: str = "squares") -> np.ndarray:
    """Piecewise-constant test images with values in ``[0, 1]``."""
    y, x = np.mgrid[0:n, 0:n] / max(n - 1, 1)
    if kind == "squares":
        img = 0.2 + 0.6 * ((x > 0.25) & (x < 0.75) & (y > 0.25) & (y < 0.75))
        img = img + 0.15 * (x + y > 1.4)
    elif kind == "disk":
        img = 0.1 + 0.8 * ((x - 0.5) ** 2 + (y - 0.5) ** 2 < 0.1)
    elif kind == "steps":
        img = np.floor(3 * x.clip(0, 0.999)) / 2
    else:
        raise ValueError(f"unknown synthetic image {kind!r}")
    return np.clip(img, 0.0, 1.0)


def add_noise(image, level: float, seed: int = 0) -> np.ndarray:
    """Add Gaussian noise whose norm is ``level`` times the image norm."""
    if level < 0:
        raise ValueError("noise level must be nonnegative")
    img = np.asarray(image, dtype=float)
    z = np.random.default_rng(seed).standard_normal(img.shape)
    nz = np.linalg.norm(z)
    return img + (level * np.linalg.norm(img) / nz) * z if nz > 0 else img.copy()
