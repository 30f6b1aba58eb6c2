import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import HC_025, HC_036, rel
from invbl import (Problem, cdp_check, decompose, evaluate_gaussian, evaluate_translated, geometric_check,
                   quad_gap, shift_form, solve_D, stationarity_residual)
from invbl.solver import any_decomposition, cdp_problem, log_ratio
from invbl.datasets import coordinate, hypercontractivity, random_general, random_geometric

ONE_D = Problem(1, (np.eye(1),), (1.0,))


def hc_closed_form(s, a, b):
    # J(g_a, g_b) for the OU datum at e^{-2t} = s, c = (2, 2), standard variance convention
    # computed straight from the Gaussian integral with sympy-free algebra
    p = hypercontractivity(s)
    return evaluate_gaussian(p, [np.array([[a]]), np.array([[b]])])


def test_evaluate_examples():
    assert evaluate_gaussian(ONE_D, [np.eye(1)]) == pytest.approx(1.0)
    g = 1 / (2 * math.pi)
    assert rel(evaluate_gaussian(hypercontractivity(0.25), [np.eye(1) * g] * 2), HC_025) < 1e-12
    p = Problem(1, (np.eye(1),), (-1.0,), np.eye(1) * 0.5)
    assert evaluate_gaussian(p, [np.eye(1) * 2.0]) == math.inf


def test_evaluate_rejects_non_pd_block():
    with pytest.raises(ValueError):
        evaluate_gaussian(ONE_D, [-np.eye(1)])


def test_evaluate_matches_direct_integral():
    # oracle: numerical integral of e^{-pi Q} prod g_k^{c_k} on a fine grid for a 1-d datum
    p = Problem(1, (np.eye(1), np.array([[2.0]])), (1.5, -0.5), np.array([[0.3]]))
    A = [np.array([[0.7]]), np.array([[0.2]])]
    x = np.linspace(-12, 12, 200_001)
    h = x[1] - x[0]
    f = np.exp(-math.pi * (0.3 * x**2 + 1.5 * 0.7 * x**2 - 0.5 * 0.2 * (2 * x) ** 2))
    num = f.sum() * h
    den = 0.7 ** (-0.5 * 1.5) * 0.2 ** (-0.5 * -0.5)
    assert rel(evaluate_gaussian(p, A), num / den) < 1e-9


def test_solve_geometric_and_stationarity():
    p = coordinate((1, 1), rational=False)
    r = solve_D(p)
    assert r.status == "optimal" and abs(r.D - 1) < 1e-12
    assert stationarity_residual(p, [np.eye(1), np.eye(1)]) == 0
    assert stationarity_residual(ONE_D, [np.eye(1) * 5]) < 1e-15
    g = _coupled_geometric()
    assert stationarity_residual(g, [np.eye(1)] * 3) < 1e-15
    assert stationarity_residual(g, [2 * np.eye(1), np.eye(1), np.eye(1)]) > 0.1


def _coupled_geometric():
    s = 1 / math.sqrt(2)
    maps = (np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), np.array([[s, s]]))
    c = (1.0, 1.0, -0.5)
    Q = np.eye(2) - sum(ck * B.T @ B for ck, B in zip(c, maps))
    return Problem(2, maps, c, Q)


def test_solve_hypercontractivity():
    r = solve_D(hypercontractivity(0.25))
    assert r.status == "optimal" and rel(r.inf_cg, HC_025) < 1e-6
    assert abs(r.dual_constant - math.sqrt(r.D)) < 1e-9 * r.dual_constant
    u = solve_D(hypercontractivity(0.64))
    assert u.status == "unbounded" and u.inf_cg == 0 and u.D == math.inf
    m = solve_D(hypercontractivity(0.36))
    assert rel(m.inf_cg, HC_036) < 1e-4


def test_infeasible_and_case100():
    p = Problem(2, (np.array([[1.0, 0.0]]),), (1.0,), np.diag([0.0, -1.0]))
    r = solve_D(p)
    assert r.status == "infeasible" and r.D == 0 and r.inf_cg == math.inf
    q = Problem(2, (np.array([[1.0, 0.0]]), np.array([[1.0, 0.0]])), (1.0, 1.0), np.eye(2))
    assert solve_D(q).status == "unbounded"


def test_max_iter_status():
    r = solve_D(hypercontractivity(0.25), max_iter=1, tol=1e-15)
    assert r.status == "max-iter" and r.notes


@given(st.integers(0, 10_000))
def test_probe_never_beats_solver(seed):
    r = np.random.default_rng(seed)
    p = random_geometric(r, max_dim=3)
    res = solve_D(p)
    assert abs(res.D - 1) < 1e-8
    for _ in range(20):
        t = []
        for nk in p.dims:
            W = r.normal(size=(nk, nk))
            t.append(W @ W.T + 0.1 * np.eye(nk))
        if log_ratio(p, t) > -math.inf:
            assert evaluate_gaussian(p, t) >= res.inf_cg - 1e-9


@given(st.integers(0, 10_000))
def test_argmax_reproduces_value(seed):
    p = random_general(np.random.default_rng(seed), max_dim=3)
    r = solve_D(p, max_iter=2000)
    if r.status == "optimal":
        assert abs(evaluate_gaussian(p, r.argmax) - r.inf_cg) <= 1e-8 * r.inf_cg


def _exp_curve(A, Y, s):
    w, V = np.linalg.eigh(A)
    R = (V * np.sqrt(w)) @ V.T
    wy, Vy = np.linalg.eigh(s * Y)
    return R @ ((Vy * np.exp(wy)) @ Vy.T) @ R


def phi_concavity_violation(p, r):
    from invbl.solver import initial_tuple
    base = initial_tuple(p)
    Ys = []
    for nk in p.dims:
        Y = r.normal(size=(nk, nk)) * 0.3
        Ys.append((Y + Y.T) / 2)
    vals = [log_ratio(p, [_exp_curve(A, Y, s) for A, Y in zip(base, Ys)]) for s in (-1.0, 0.0, 1.0)]
    if not all(math.isfinite(v) for v in vals):
        return 0.0
    return 0.5 * (vals[0] + vals[2]) - vals[1]


@given(st.integers(0, 10_000))
def test_phi_midpoint_concavity(seed):
    r = np.random.default_rng(seed)
    p = random_general(r, max_dim=3)
    assert phi_concavity_violation(p, r) <= 1e-9


def test_shift_form_examples():
    p = coordinate((1, 1), rational=False)
    d = decompose(p)
    t = [np.eye(1), np.eye(1)]
    assert shift_form(p, d, t).psd
    zero = [np.zeros(0), np.zeros(1), np.zeros(1), np.zeros(0)]
    assert evaluate_translated(p, d, t, zero) == pytest.approx(evaluate_gaussian(p, t))
    q = Problem(1, (), (), np.eye(1))
    dq = decompose(q)
    assert dq.B0.shape == (1, 1) and shift_form(q, dq, []).psd


def test_shift_form_case101_not_psd_and_translates_vanish():
    p = hypercontractivity(0.36)
    d = any_decomposition(p)
    t = [np.eye(1) / (2 * math.pi)] * 2
    sf = shift_form(p, d, t)
    assert not sf.psd
    w, V = np.linalg.eigh(sf.matrix)
    u = V[:, 0]
    sizes = [d.B0.shape[0], 1, 1, d.Bm1.shape[0]]
    parts = np.split(u, np.cumsum(sizes)[:-1])
    vals = [evaluate_translated(p, d, t, [lam * x for x in parts]) for lam in (1, 4, 16)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-6


def shift_dominance_violation(p, r):
    d = decompose(p)
    from invbl.solver import initial_tuple
    t = initial_tuple(p)
    if not shift_form(p, d, t).psd:
        return None
    base = evaluate_gaussian(p, t)
    sizes = [d.B0.shape[0]] + list(p.dims) + [d.Bm1.shape[0]]
    worst = 0.0
    for _ in range(100):
        sh = [r.normal(size=k) for k in sizes]
        worst = max(worst, base - evaluate_translated(p, d, t, sh))
    return worst


@given(st.integers(0, 10_000))
def test_shift_dominance(seed):
    r = np.random.default_rng(seed)
    p = random_geometric(r, max_dim=4)
    v = shift_dominance_violation(p, r)
    assert v is None or v <= 1e-9 * evaluate_gaussian(p, [np.eye(k) for k in p.dims])


def test_quad_gap_examples(rng):
    maps = [np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), np.array([[1.0, 1.0]])]
    w = [1.5, 1.2, -0.5]
    t = [np.array([[2.0]]), np.array([[1.0]]), np.array([[0.5]])]
    A = sum(c * B.T @ Ak @ B for B, c, Ak in zip(maps, w, t))
    y = rng.normal(size=2)
    canon = [Ak @ B @ np.linalg.solve(A, y) for B, Ak in zip(maps, t)]
    assert abs(quad_gap(maps, w, t, canon)) < 1e-12
    assert quad_gap(maps, w, t, [np.zeros(1)] * 3) == 0
    bumped = [canon[0] + 0.3, canon[1], canon[2]]
    assert quad_gap(maps, w, t, bumped) > 0


def quad_gap_case(r):
    # positive factors stack to an onto map; negative ones are arbitrary
    n = int(r.integers(1, 4))
    maps, w, t = [], [], []
    left = n
    while left:
        k = int(r.integers(1, left + 1))
        left -= k
        maps.append(r.normal(size=(k, n)))
        w.append(float(r.uniform(0.5, 2.0)))
    for _ in range(int(r.integers(1, 3))):
        maps.append(r.normal(size=(int(r.integers(1, n + 1)), n)))
        w.append(-float(r.uniform(0.05, 0.5)))
    for B in maps:
        k = B.shape[0]
        W = r.normal(size=(k, k))
        t.append(W @ W.T + 0.2 * np.eye(k))
    return maps, w, t


@given(st.integers(0, 10_000))
def test_quad_gap_nonnegative_with_canonical_equality(seed):
    r = np.random.default_rng(seed)
    maps, w, t = quad_gap_case(r)
    A = sum(c * B.T @ Ak @ B for B, c, Ak in zip(maps, w, t))
    if np.linalg.eigvalsh(A).min() < 1e-6:
        return
    ys = [r.normal(size=B.shape[0]) for B in maps]
    scale = 1 + sum(float(y @ y) for y in ys)
    assert quad_gap(maps, w, t, ys) >= -1e-10 * scale
    y = r.normal(size=maps[0].shape[1])
    canon = [Ak @ B @ np.linalg.solve(A, y) for B, Ak in zip(maps, t)]
    assert abs(quad_gap(maps, w, t, canon)) <= 1e-9 * (1 + float(y @ np.linalg.solve(A, y)))


@given(st.integers(0, 10_000), st.floats(0.1, 10.0))
def test_scale_invariance(seed, lam):
    p = coordinate((1, 1), rational=False)
    # homogeneous: 1 + 1.5 - 0.5 = 2 = dim H
    q = Problem(2, (np.array([[1.0, 1.0]]),) + p.maps[:1] + p.maps[1:], (1.0, 1.5, -0.5))
    r = np.random.default_rng(seed)
    a = [np.array([[x]]) for x in r.uniform(0.5, 2.0, size=3)]
    v = evaluate_gaussian(q, a)
    if math.isfinite(v):
        assert rel(evaluate_gaussian(q, [lam * x for x in a]), v) < 1e-10


def test_geometric_check_examples():
    assert geometric_check(coordinate((1, 1), rational=False))
    s = 1 / math.sqrt(2)
    u = [np.array([[1.0, 0.0]]), np.array([[s, s]]), np.array([[s, -s]])]
    S = sum(c * B.T @ B for c, B in zip((0.5, 1.0, 1.0), u))
    bl = Problem(2, tuple(u), (0.5, 1.0, 1.0), np.eye(2) - S)
    assert not geometric_check(bl)  # dim H < s+ + sum dim H_i
    bl2 = Problem(2, (u[1], u[2]), (1.0, 1.0))
    assert geometric_check(bl2)
    assert not geometric_check(Problem(1, (2 * np.eye(1),), (0.25,)))


def test_cdp_examples():
    assert cdp_check(np.eye(2), [1, 1], [1.0, 1.0])
    rho = 0.5
    assert cdp_check(np.array([[1, rho], [rho, 1]]), [1, 1], [1 - rho, 1 - rho])
    assert not cdp_check(np.eye(2), [1, 1], [3.0, 1.0])
    with pytest.raises(ValueError):
        cdp_check(np.array([[0.0, 0.0], [0.0, 1.0]]), [1, 1], [1.0, 1.0])


@given(st.integers(0, 10_000))
def test_cdp_datum_is_geometric(seed):
    r = np.random.default_rng(seed)
    W = r.normal(size=(3, 3))
    cov = W @ W.T + 0.5 * np.eye(3)
    ps = [float(x) for x in r.uniform(0.2, 1.0, size=2)]
    p = cdp_problem(cov, [1, 2], ps)
    S = p.Q + sum(c * B.T @ B for c, B in zip(p.c, p.B))
    assert np.allclose(S, np.eye(3))
    assert all(np.allclose(B @ B.T, np.eye(B.shape[0])) for B in p.B)
