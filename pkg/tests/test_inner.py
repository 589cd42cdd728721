import numpy as np
import pytest

from conftest import random_rescaled, toy2
from ncalm.inner import (InnerSettings, InvalidConfiguration, augmented_loop,
                         contraction_factor, fixed_point_step, minimize_augmented)
from ncalm.linalg import from_matrix
from ncalm.potentials import SmoothedPotential
from ncalm.problems import ConstrainedProblem
from ncalm.thresholding import prox

TIGHT = InnerSettings(fixed_point_tol=1e-13, fixed_point_max_iter=100_000)


def zero_problem(m=3):
    return ConstrainedProblem(from_matrix(0.5 * np.eye(m)), np.zeros(m),
                              from_matrix(np.ones((1, m)) / m), [0.0], 0.2,
                              SmoothedPotential(2, 1.0, 0.2))


def inner_objective(P, v, u, q, omega, lam=0.5):
    """``J(v) + omega ||v-u||^2 - <q, A v> + lam ||A v - f||^2`` for a batch of rows ``v``."""
    V = np.atleast_2d(v)
    T = P.T.to_dense()
    A = P.A.to_dense()
    fid = np.sum((V @ T.T - P.g) ** 2, axis=1)
    pen = P.gamma * (P.pot.value(V) @ P.w)
    res = V @ A.T - P.f
    return fid + pen + omega * np.sum((V - u) ** 2, axis=1) - (V @ A.T) @ q + lam * np.sum(res ** 2, axis=1)


def omega_for(P):
    return 1.0001 * P.semiconvexity


def test_step_zero_data_is_fixed():
    P = zero_problem()
    out = fixed_point_step(P, np.zeros(3), np.zeros(1), np.zeros(3), omega_for(P))
    assert not out.any()


def test_step_from_origin_matches_direct_formula():
    P = toy2()
    omega = omega_for(P)
    out = fixed_point_step(P, np.zeros(2), np.zeros(1), np.zeros(2), omega)
    T, A = P.T.to_dense(), P.A.to_dense()
    xi = (T.T @ P.g + 0.5 * A.T @ P.f) / 3
    assert np.allclose(out, prox(P.pot, P.gamma / 3, xi), atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_step_is_contraction_on_random_pairs(seed):
    P, omega = random_rescaled(seed, m=4)
    delta = contraction_factor(P, omega)
    rng = np.random.default_rng(seed)
    u, q = rng.standard_normal(4), rng.standard_normal(P.A.out_dim)
    for _ in range(50):
        v1, v2 = 3 * rng.standard_normal((2, 4))
        d_out = np.linalg.norm(fixed_point_step(P, v1, q, u, omega) - fixed_point_step(P, v2, q, u, omega))
        assert d_out <= delta * np.linalg.norm(v1 - v2) + 1e-12


def test_preconditions_enforced():
    P = toy2()
    with pytest.raises(InvalidConfiguration):
        fixed_point_step(P, np.zeros(2), np.zeros(1), np.zeros(2), 0.5 * P.semiconvexity)
    with pytest.raises(InvalidConfiguration):
        fixed_point_step(P, np.zeros(2), np.zeros(1), np.zeros(2), 1.2)
    bigT = P.with_data(T=from_matrix(2 * np.eye(2)))
    with pytest.raises(InvalidConfiguration):
        fixed_point_step(bigT, np.zeros(2), np.zeros(1), np.zeros(2), omega_for(P))
    bigA = P.with_data(A=from_matrix([[2.0, 2.0]]))
    with pytest.raises(InvalidConfiguration):
        fixed_point_step(bigA, np.zeros(2), np.zeros(1), np.zeros(2), omega_for(P))
    with pytest.raises(InvalidConfiguration):
        InnerSettings(lam=0)


def test_minimize_zero_data():
    P = zero_problem()
    res = minimize_augmented(P, np.zeros(3), np.zeros(1), omega_for(P))
    assert res.converged and not res.v.any()


def test_minimize_matches_2d_grid_search():
    P = toy2()
    omega = omega_for(P)
    u, q = np.zeros(2), np.zeros(1)
    res = minimize_augmented(P, u, q, omega, settings=TIGHT)
    assert res.converged
    x = np.arange(-2, 2 + 1e-12, 1e-3)
    best, best_val = None, np.inf
    for chunk in np.array_split(x, 20):
        X, Y = np.meshgrid(chunk, x, indexing="ij")
        V = np.stack([X.ravel(), Y.ravel()], axis=1)
        vals = inner_objective(P, V, u, q, omega)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best, best_val = V[i], vals[i]
    assert np.linalg.norm(res.v - best) <= 2e-3


@pytest.mark.parametrize("seed", range(5))
def test_a_priori_error_bound(seed):
    P, omega = random_rescaled(seed)
    delta = contraction_factor(P, omega)
    rng = np.random.default_rng(seed + 1)
    u, q = rng.standard_normal(P.m), rng.standard_normal(P.A.out_dim)
    v_star = minimize_augmented(P, u, q, omega, settings=TIGHT).v
    v0 = np.zeros(P.m)
    v = v0.copy()
    vs = []
    for _ in range(200):
        v = fixed_point_step(P, v, q, u, omega)
        vs.append(v)
    d1 = np.linalg.norm(vs[0] - v0)
    for n, vn in enumerate(vs, start=1):
        assert np.linalg.norm(vn - v_star) <= delta ** n / (1 - delta) * d1 + 1e-11


@pytest.mark.parametrize("seed", range(8))
def test_empirical_step_ratios(seed):
    P, omega = random_rescaled(seed)
    delta = contraction_factor(P, omega)
    rng = np.random.default_rng(seed + 2)
    u, q = rng.standard_normal(P.m), rng.standard_normal(P.A.out_dim)
    res = minimize_augmented(P, u, q, omega, settings=TIGHT, v0=3 * rng.standard_normal(P.m),
                             record_steps=True)
    h = np.array(res.step_history)
    keep = h[:-1] > 1e-11
    assert np.all(h[1:][keep] <= (delta + 1e-9) * h[:-1][keep])


def test_augmented_loop_single_update_when_feasible():
    P = zero_problem()
    st = augmented_loop(P, np.zeros(3), np.zeros(1), 1, 1.5, omega_for(P))
    assert st.inner_count == 1 and not st.capped


def test_augmented_loop_constrained_minimiser():
    P = toy2()
    omega = omega_for(P)
    u = np.zeros(2)
    # ell = 1 gives the bound 1, met by the first iterate; a large ell forces feasibility
    st = augmented_loop(P, u, np.zeros(1), 1000, 1.5, omega, settings=TIGHT)
    assert (1 + 0.0) * st.feas_history[-1] <= 1000 ** -1.5
    x = np.arange(-2, 2, 1e-5)
    V = np.stack([x, 0.6 - x], axis=1)
    vals = inner_objective(P, V, u, np.zeros(1), omega)
    assert np.linalg.norm(st.v - V[np.argmin(vals)]) <= 5e-3


@pytest.mark.parametrize("seed", range(6))
def test_feasibility_non_increasing(seed):
    P, omega = random_rescaled(seed)
    rng = np.random.default_rng(seed)
    st = augmented_loop(P, rng.standard_normal(P.m), np.zeros(P.A.out_dim), 200, 1.5, omega)
    h = st.feas_history
    assert len(h) > 1
    assert all(b <= a + 1e-12 for a, b in zip(h, h[1:]))


@pytest.mark.parametrize("seed", range(6))
def test_multiplier_optimality(seed):
    P, omega = random_rescaled(seed)
    rng = np.random.default_rng(seed + 3)
    u = rng.standard_normal(P.m)
    settings = InnerSettings()
    st = augmented_loop(P, u, np.zeros(P.A.out_dim), 50, 1.5, omega, settings=settings)
    grad = P.gradient(st.v) + 2 * omega * (st.v - u)
    assert np.linalg.norm(grad - P.A.adjoint(st.q)) <= 10 * settings.fixed_point_tol


def test_augmented_loop_cap_flag():
    P, omega = random_rescaled(0)
    st = augmented_loop(P, np.zeros(P.m), np.zeros(P.A.out_dim), 10 ** 6, 1.5, omega,
                        settings=InnerSettings(inner_max_iter=2))
    assert st.capped and st.inner_count == 2


def test_alpha_validated():
    P = toy2()
    with pytest.raises(InvalidConfiguration):
        augmented_loop(P, np.zeros(2), np.zeros(1), 1, 1.0, omega_for(P))
