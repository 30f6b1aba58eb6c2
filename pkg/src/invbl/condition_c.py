"""Condition (C): admissible splits and the super/sub-criticality clauses.

Everything here is a rank fact. The kernels of B_0 and B_{m+1} come from Q
directly (ker B_0 = (ker B+)^{perp Q}, ker B_{m+1} = rad Q + ker B+), so
rational data stay exact throughout.
"""
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .classify import classify, split_kernels
from .problem import Problem, validate

CANDIDATE_CAP = 10_000


@dataclass
class Context:
    """Kernels of B_0, B_1..B_m, B_{m+1} with their target dimensions."""

    problem: Problem
    kernels: list
    target_dims: list
    ker_bplus: la.Subspace

    @property
    def n(self):
        return self.problem.dim

    @property
    def exact(self):
        return self.problem.exact


@dataclass
class SplitData:
    V: la.Subspace
    image_dims: list
    quotient_dims: list


@dataclass
class ConditionCReport:
    verdict: str
    witness: dict | None = None
    candidates_examined: int = 0
    criticals: list = field(default_factory=list)
    truncated: bool = False

    @property
    def holds(self):
        return self.verdict == "holds-on-candidates"


def context(p: Problem) -> Context:
    p = validate(p)
    if classify(p).case != "Case11":
        raise ValueError("Condition (C) is stated for non-degenerate data (Case11)")
    H0, ker0, kerm1 = split_kernels(p)
    n = p.dim
    kernels = [ker0] + [la.kernel(B) for B in p.maps] + [kerm1]
    dims = [n - ker0.dim] + list(p.dims) + [n - kerm1.dim]
    return Context(p, kernels, dims, H0)


def _ctx(p, ctx):
    return ctx if ctx is not None else context(p)


def _dim_image(ctx: Context, k: int, V: la.Subspace) -> int:
    K = ctx.kernels[k]
    return la.subspace_sum(V, K).dim - K.dim


def split_data(p, V: la.Subspace, ctx=None) -> SplitData:
    ctx = _ctx(p, ctx)
    img = [_dim_image(ctx, k, V) for k in range(len(ctx.kernels))]
    quo = [t - d for t, d in zip(ctx.target_dims, img)]
    return SplitData(V, img, quo)


def is_admissible(p, V: la.Subspace, ctx=None) -> bool:
    """dim V = sum_{i=0}^{m+} dim B_i V."""
    ctx = _ctx(p, ctx)
    mp = ctx.problem.m_plus
    return V.dim == sum(_dim_image(ctx, k, V) for k in range(mp + 1))


def check_clauses(p, V: la.Subspace, ctx=None) -> dict:
    """Clause (i) when V is inside ker B_{m+1}, clause (ii) when V + ker B_0 = H; None if not applicable."""
    ctx = _ctx(p, ctx)
    q = ctx.problem
    sd = split_data(q, V, ctx)
    c = q.exponents
    m = q.m
    sub_lhs = V.dim
    sub_rhs = sum(c[k - 1] * sd.image_dims[k] for k in range(1, m + 1))
    quo_lhs = ctx.n - V.dim
    quo_rhs = sum(c[k - 1] * sd.quotient_dims[k] for k in range(1, m + 1))
    sub_applies = sd.image_dims[m + 1] == 0
    quo_applies = sd.quotient_dims[0] == 0
    tol = 0 if ctx.exact else 1e-9
    out = {
        "super_ok": (sub_lhs >= sub_rhs - tol) if sub_applies else None,
        "sub_ok": (quo_lhs <= quo_rhs + tol) if quo_applies else None,
        "critical_sub": bool(sub_applies and abs(sub_lhs - sub_rhs) <= tol),
        "critical_quot": bool(quo_applies and abs(quo_lhs - quo_rhs) <= tol),
        "super": (sub_lhs, sub_rhs),
        "sub": (quo_lhs, quo_rhs),
    }
    return out


def _seeds(ctx: Context):
    n, ex = ctx.n, ctx.exact
    seeds = list(ctx.kernels)
    seeds += [la.radical(ctx.problem.kernel), ctx.ker_bplus, la.full_space(n, ex), la.zero_space(n, ex)]
    return seeds


def generate_candidates(p, depth: int = 2, extra=(), ctx=None, cap: int = CANDIDATE_CAP):
    """Closure of the seed subspaces under sum, intersection and V -> B_k^{-1}(B_k V).

    Returns (candidates, truncated).
    """
    ctx = _ctx(p, ctx)
    known = {}
    frontier = []

    def add(V):
        key = V.key()
        if key in known:
            return False
        known[key] = V
        frontier.append(V)
        return True

    for V in _seeds(ctx) + list(extra):
        add(V)
    kernels = ctx.kernels
    for _ in range(depth):
        current, frontier = frontier, []
        pool = list(known.values())
        for A in current:
            # B_k^{-1}(B_k A) = A + ker B_k
            for K in kernels:
                add(la.subspace_sum(A, K))
            for B in pool:
                add(la.subspace_sum(A, B))
                add(la.intersect(A, B))
                if len(known) >= cap:
                    return list(known.values())[:cap], True
        if not frontier:
            break
    return list(known.values()), False


def _random_subspaces(ctx: Context, count: int, seed: int):
    rng = np.random.default_rng(seed)
    n = ctx.n
    out = []
    for _ in range(count):
        if n <= 1:
            break
        d = int(rng.integers(1, n))
        # small integer bases keep rational data exact and hit special subspaces often
        M = rng.integers(-1, 2, size=(n, d))
        if ctx.exact:
            V = la.Subspace(la.fraction_array(M), n)
        else:
            V = la.Subspace(M.astype(float), n)
        out.append(V)
    return out


def check_condition_c(p, depth: int = 2, extra=(), random_subspaces: int = 0, seed: int = 0,
                      ctx=None, cap: int = CANDIDATE_CAP) -> ConditionCReport:
    ctx = _ctx(p, ctx)
    cands, truncated = generate_candidates(ctx.problem, depth, extra, ctx, cap)
    cands += _random_subspaces(ctx, random_subspaces, seed)
    examined = 0
    criticals = []
    for V in cands:
        if not is_admissible(ctx.problem, V, ctx):
            continue
        examined += 1
        cl = check_clauses(ctx.problem, V, ctx)
        if cl["super_ok"] is False or cl["sub_ok"] is False:
            clause = "supercritical (i)" if cl["super_ok"] is False else "subcritical (ii)"
            lhs, rhs = cl["super"] if cl["super_ok"] is False else cl["sub"]
            witness = {"V": V, "clause": clause, "lhs": lhs, "rhs": rhs}
            return ConditionCReport("violated", witness, examined, criticals, truncated)
        if cl["critical_sub"]:
            criticals.append((V, "subspace"))
        if cl["critical_quot"]:
            criticals.append((V, "quotient"))
    return ConditionCReport("holds-on-candidates", None, examined, criticals, truncated)


def verify_witness(p, report: ConditionCReport) -> bool:
    """Independent recount: admissible, clause applicable and strictly violated."""
    if report.witness is None:
        return False
    p = validate(p)
    V = report.witness["V"]
    n = p.dim
    H0, ker0, kerm1 = split_kernels(p)
    # dim B V from a rank of the image rather than through kernels
    imgs = [la.dim_image(B, V) for B in p.maps]
    dim_b0 = V.dim - la.intersect(V, ker0).dim
    if V.dim != dim_b0 + sum(imgs[: p.m_plus]):
        return False
    c = p.exponents
    if report.witness["clause"].startswith("super"):
        if not kerm1.contains(V):
            return False
        lhs, rhs = V.dim, sum(ck * d for ck, d in zip(c, imgs))
        return lhs < rhs if p.exact else lhs < rhs - 1e-9
    if not la.sum_equals_space(V, ker0):
        return False
    lhs = n - V.dim
    rhs = sum(ck * (nk - d) for ck, nk, d in zip(c, p.dims, imgs))
    return lhs > rhs if p.exact else lhs > rhs + 1e-9


def quotient_maps(p, V: la.Subspace):
    """Explicit beta_k: H/V -> H_k/B_k V in orthonormal complement coordinates (float)."""
    p = validate(p)
    n = p.dim
    Vf = la.float_array(V.basis)
    J = la.null_space(Vf.T) if V.dim else np.eye(n)
    out = []
    for B in p.B:
        W = B @ Vf if V.dim else np.zeros((B.shape[0], 0))
        Jk = la.null_space(W.T) if W.shape[1] and np.linalg.matrix_rank(W) else np.eye(B.shape[0])
        out.append(Jk.T @ B @ J)
    return J, out


def exponent_ledger(p, ctx=None) -> list:
    """Constraints forced on the exponents by Condition (C)."""
    ctx = _ctx(p, ctx)
    q = ctx.problem
    n, c = q.dim, q.exponents
    tol = 0 if q.exact else 1e-9
    out = []
    for i in range(q.m_plus):
        if q.dims[i] > 0:
            out.append({"kind": "c_i>=1", "index": i + 1, "holds": bool(c[i] >= 1 - tol)})
    b0_zero = ctx.kernels[0].dim == n
    bm1_zero = ctx.kernels[-1].dim == n
    total = sum(ck * nk for ck, nk in zip(c, q.dims))
    equality = abs(total - n) <= tol
    if b0_zero and bm1_zero:
        out.append({"kind": "homogeneity", "lhs": total, "rhs": n, "holds": bool(equality)})
    if equality and (b0_zero != bm1_zero):
        # H critical (as subspace if B_{m+1} = 0, as quotient if B_0 = 0) forces both to vanish
        out.append({"kind": "criticality-forces-no-kernel", "holds": False,
                    "detail": "B_0 = 0" if b0_zero else "B_{m+1} = 0"})
    return out
