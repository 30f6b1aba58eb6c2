"""Positivity domains when every factor is one-dimensional.

Exponents are in the domain iff the excess mass (c_i - 1) on the positive
side can be shipped to |c_j| on the negative side along the graph linking i
and j whenever u_j has a nonzero i-th coordinate in the basis (u_0?, u_1..u_m+).
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import networkx as nx
import numpy as np
from networkx.algorithms.flow import edmonds_karp
from scipy.optimize import linprog

from . import linalg as la
from .problem import Problem, validate

SUBSET_CAP = 20


@dataclass
class RankOneInstance:
    n: int
    u: list
    m_plus: int
    u0: np.ndarray | None = None
    um1: np.ndarray | None = None

    @property
    def m(self):
        return len(self.u)


@dataclass(frozen=True)
class BipartiteGraph:
    """Left vertices 0?,1..m+; right vertices m+1..m and m+1 (the sink) when present."""

    m: int
    m_plus: int
    edges: frozenset
    source: bool = False
    sink: bool = False

    @property
    def left(self):
        return ([0] if self.source else []) + list(range(1, self.m_plus + 1))

    @property
    def right(self):
        return list(range(self.m_plus + 1, self.m + 1)) + ([self.m + 1] if self.sink else [])

    def neighbours(self, vertices):
        vs = set(vertices)
        out = set()
        for i, j in self.edges:
            if i in vs:
                out.add(j)
            if j in vs:
                out.add(i)
        return out

    @property
    def has_kernel(self):
        return self.source or self.sink


@dataclass
class DomainVerdict:
    member: bool
    certificate: dict
    route: str = "subsets"
    notes: list = field(default_factory=list)


@dataclass
class TransportResult:
    feasible: bool
    plan: dict | None = None
    cut: object = None
    flow_value: object = None


@dataclass
class Facets:
    apex: list
    generators: list
    inequalities: list
    equalities: list


# ---- instance and graph ------------------------------------------------

def _is_zero(x, exact):
    return x == 0 if exact else abs(x) <= la.TOL_RANK


def _vec_zero(v, exact):
    return v is None or all(_is_zero(x, exact) for x in np.ravel(v))


def _nonzero_column(M, exact):
    Mf = la.float_array(M)
    j = int(np.argmax(np.abs(Mf).max(axis=0))) if Mf.size else 0
    if Mf.size == 0 or _vec_zero(M[:, j], exact):
        return None
    return M[:, j].copy()


def from_problem(p: Problem) -> RankOneInstance:
    """Rows u_k and kernel directions u_0, u_{m+1} with Q = u0 u0^T - um1 um1^T up to scaling."""
    p = validate(p)
    if any(d != 1 for d in p.dims):
        raise ValueError("every factor must be one-dimensional")
    exact = p.exact
    Q = p.kernel
    u = [B[0].copy() for B in p.maps]
    from .classify import _ker_bplus
    H0 = _ker_bplus(p)
    if H0.dim > 1:
        raise ValueError("ker B+ has dimension above one")
    if H0.dim == 1:
        h = H0.basis[:, 0]
        Qh = Q @ h
        hQh = h @ Qh
        if _is_zero(hQh, exact) or (not exact and hQh <= 0) or (exact and hQh <= 0):
            raise ValueError("Q is not positive on ker B+")
        u0 = Qh
        Mminus = np.outer(Qh, Qh) / hQh - Q
    else:
        u0 = None
        Mminus = -Q
    if la.rank(Mminus) > 1:
        raise ValueError("negative part of Q has rank above one")
    um1 = _nonzero_column(Mminus, exact)
    if um1 is not None:
        d = um1 @ um1 if exact else float(um1 @ um1)
        ev = um1 @ Mminus @ um1
        if (ev < 0) if exact else (ev < -la.TOL_RANK * max(1.0, d)):
            raise ValueError("negative part of Q is not positive semidefinite")
    return RankOneInstance(p.dim, u, p.m_plus, u0, um1)


def build_graph(inst: RankOneInstance) -> BipartiteGraph:
    exact = bool(inst.u) and isinstance(np.ravel(inst.u[0])[0], Fraction)
    source = not _vec_zero(inst.u0, exact)
    sink = not _vec_zero(inst.um1, exact)
    cols = ([inst.u0] if source else []) + list(inst.u[: inst.m_plus])
    conv = la.fraction_array if exact else (lambda M: np.asarray(M, float))
    U = conv(np.array(cols, dtype=object if exact else float).T.reshape(inst.n, len(cols)))
    if len(cols) != inst.n or la.rank(U) != inst.n:
        raise ValueError("basis hypothesis fails: (u0?, u1..um+) is not a basis of H")
    targets = list(inst.u[inst.m_plus:]) + ([inst.um1] if sink else [])
    edges = set()
    if targets:
        X = conv(np.array(targets, dtype=object if exact else float).T.reshape(inst.n, len(targets)))
        if exact:
            R, _ = la._rref(np.hstack([U, X]))
            coords = R[:, inst.n:]
        else:
            coords = np.linalg.solve(U, X)
        labels = ([0] if source else []) + list(range(1, inst.m_plus + 1))
        right = list(range(inst.m_plus + 1, inst.m + 1)) + ([inst.m + 1] if sink else [])
        for col, j in enumerate(right):
            for row, i in enumerate(labels):
                if not _is_zero(coords[row, col], exact):
                    edges.add((i, j))
        if sink and source and (0, inst.m + 1) in edges:
            raise ValueError("basis hypothesis fails: u_{m+1} is not in span(u_1..u_m+)")
    return BipartiteGraph(inst.m, inst.m_plus, frozenset(edges), source, sink)


# ---- arithmetic helpers ------------------------------------------------

def _exact(xs):
    return all(isinstance(x, (Fraction, int)) for x in xs)


def _le(a, b, exact, scale=1.0):
    return a <= b if exact else a <= b + 1e-9 * (1 + abs(scale))


def _eq(a, b, exact, scale=1.0):
    return a == b if exact else abs(a - b) <= 1e-9 * (1 + abs(scale))


# ---- transport ---------------------------------------------------------

def transport_plan(alpha: dict, beta: dict, edges) -> TransportResult:
    """Max-flow feasibility of shipping alpha (left masses) onto beta (right masses) along edges.

    Edges carry capacity 1 + sum(alpha); a deficient flow yields the cut set S
    (source side of a minimum cut, left part) violating sum_S alpha <= sum_{N(S)} beta.
    """
    vals = list(alpha.values()) + list(beta.values())
    if any(v < 0 for v in vals):
        raise ValueError("masses must be nonnegative")
    exact = _exact(vals)
    ta, tb = sum(alpha.values()), sum(beta.values())
    w = 1 + ta
    G = nx.DiGraph()
    G.add_node("A")
    G.add_node("B")
    for i, a in alpha.items():
        G.add_edge("A", ("L", i), capacity=a)
    for j, b in beta.items():
        G.add_edge(("R", j), "B", capacity=b)
    for i, j in edges:
        if i in alpha and j in beta:
            G.add_edge(("L", i), ("R", j), capacity=w)
    value, flow = nx.maximum_flow(G, "A", "B", flow_func=edmonds_karp)
    if not _eq(ta, tb, exact, ta):
        return TransportResult(False, None, "total-mass", value)
    if _eq(value, ta, exact, ta):
        plan = {}
        for i, j in edges:
            f = flow.get(("L", i), {}).get(("R", j), 0)
            if f:
                plan[(i, j)] = f
        return TransportResult(True, plan, None, value)
    _, (side, _) = nx.minimum_cut(G, "A", "B", flow_func=edmonds_karp)
    S = sorted(v[1] for v in side if isinstance(v, tuple) and v[0] == "L")
    return TransportResult(False, None, S, value)


def replay_plan(alpha, beta, edges, plan) -> bool:
    """Plan is supported on edges, nonnegative, and has the prescribed marginals."""
    exact = _exact(list(alpha.values()) + list(beta.values()) + list(plan.values()))
    es = set(edges)
    if any(e not in es or g < 0 for e, g in plan.items()):
        return False
    scale = sum(alpha.values())
    for i, a in alpha.items():
        if not _eq(sum(g for (s, _), g in plan.items() if s == i), a, exact, scale):
            return False
    for j, b in beta.items():
        if not _eq(sum(g for (_, t), g in plan.items() if t == j), b, exact, scale):
            return False
    return True


# ---- membership --------------------------------------------------------

def _masses(c, g):
    alpha = {i: c[i - 1] - 1 for i in range(1, g.m_plus + 1)}
    beta = {j: -c[j - 1] for j in range(g.m_plus + 1, g.m + 1)}
    return alpha, beta


def _basic_checks(c, g, exact, homogeneous):
    if len(c) != g.m:
        raise ValueError(f"expected {g.m} exponents")
    for i in range(1, g.m_plus + 1):
        if c[i - 1] <= 0:
            raise ValueError("sign pattern: positive exponents must come first")
    for j in range(g.m_plus + 1, g.m + 1):
        if c[j - 1] > 0:
            raise ValueError("sign pattern: trailing exponents must be non-positive")
    for i in range(1, g.m_plus + 1):
        if not _le(1, c[i - 1], exact):
            return {"violated": "c_i>=1", "index": i, "lhs": c[i - 1], "rhs": 1}
    if homogeneous:
        total = sum(c)
        if not _eq(total, g.m_plus, exact, total):
            return {"violated": "homogeneity", "lhs": total, "rhs": g.m_plus}
    return None


def _subset_violation(alpha, beta, g, exact, family="S", forbid=None):
    """First violated subset inequality of the given family, or None."""
    if family == "S":
        items = sorted(alpha)
        for r in range(1, len(items) + 1):
            for S in combinations(items, r):
                if forbid is not None and g.neighbours(S) & forbid:
                    continue
                lhs = sum(alpha[i] for i in S)
                rhs = sum(beta[j] for j in g.neighbours(S) if j in beta)
                if not _le(lhs, rhs, exact, lhs):
                    return {"violated": "subset S", "set": list(S), "lhs": lhs, "rhs": rhs}
    else:
        items = sorted(beta)
        for r in range(1, len(items) + 1):
            for T in combinations(items, r):
                if forbid is not None and g.neighbours(T) & forbid:
                    continue
                lhs = sum(beta[j] for j in T)
                rhs = sum(alpha[i] for i in g.neighbours(T) if i in alpha)
                if not _le(lhs, rhs, exact, lhs):
                    return {"violated": "subset T", "set": list(T), "lhs": lhs, "rhs": rhs}
    return None


def membership(c, g: BipartiteGraph, route: str = "subsets") -> DomainVerdict:
    """Domain test without kernel: c_i >= 1, sum c = m+, and the subset (Hall) inequalities."""
    c = list(c)
    exact = _exact(c)
    bad = _basic_checks(c, g, exact, homogeneous=True)
    if bad:
        return DomainVerdict(False, bad, route)
    alpha, beta = _masses(c, g)
    if route == "subsets" and g.m_plus <= SUBSET_CAP:
        bad = _subset_violation(alpha, beta, g, exact, "S")
        if bad:
            return DomainVerdict(False, bad, route)
    elif route == "subsets-T":
        bad = _subset_violation(alpha, beta, g, exact, "T")
        if bad:
            return DomainVerdict(False, bad, route)
    tr = transport_plan(alpha, beta, g.edges)
    if tr.feasible:
        return DomainVerdict(True, {"plan": tr.plan}, route)
    if tr.cut == "total-mass":
        return DomainVerdict(False, {"violated": "homogeneity", "lhs": sum(c), "rhs": g.m_plus}, route)
    S = tr.cut
    lhs = sum(alpha[i] for i in S)
    rhs = sum(beta[j] for j in g.neighbours(S) if j in beta)
    notes = [] if route == "flow" else ["subset enumeration passed but flow failed"]
    return DomainVerdict(False, {"violated": "subset S", "set": S, "lhs": lhs, "rhs": rhs}, route, notes)


def membership_with_kernel(c, g: BipartiteGraph, route: str = "subsets") -> DomainVerdict:
    """Domain test with source 0 and sink m+1; no homogeneity constraint."""
    c = list(c)
    exact = _exact(c)
    bad = _basic_checks(c, g, exact, homogeneous=False)
    notes = []
    if not g.neighbours([0]) and not g.neighbours([g.m + 1]):
        notes.append("both kernel vertices isolated: the constraints imply sum c = m+")
    if bad:
        return DomainVerdict(False, bad, route, notes)
    alpha, beta = _masses(c, g)
    if route == "subsets":
        bad = _subset_violation(alpha, beta, g, exact, "S", forbid={g.m + 1} if g.sink else None)
        if bad is None:
            bad = _subset_violation(alpha, beta, g, exact, "T", forbid={0} if g.source else None)
        if bad:
            return DomainVerdict(False, bad, route, notes)
    big = 1 + sum(alpha.values()) + sum(beta.values())
    ta, tb = sum(alpha.values()), sum(beta.values())
    ext_alpha = dict(alpha)
    ext_beta = dict(beta)
    ext_alpha[0] = big + max(tb - ta, 0)
    ext_beta[g.m + 1] = big + max(ta - tb, 0)
    edges = set(g.edges) | {(0, g.m + 1)}
    tr = transport_plan(ext_alpha, ext_beta, edges)
    if tr.feasible:
        plan = dict(tr.plan)
        gamma = plan.pop((0, g.m + 1), 0)
        c0 = 1 + ext_alpha[0] - gamma
        cm1 = -(ext_beta[g.m + 1] - gamma)
        return DomainVerdict(True, {"plan": plan, "c0": c0, "c_m1": cm1}, route, notes)
    S_ext = tr.cut if isinstance(tr.cut, list) else []
    if 0 not in S_ext:
        S = [i for i in S_ext if i != 0]
        lhs = sum(alpha[i] for i in S)
        rhs = sum(beta[j] for j in g.neighbours(S) if j in beta)
        cert = {"violated": "subset S", "set": S, "lhs": lhs, "rhs": rhs}
    else:
        N = g.neighbours(S_ext) | {g.m + 1}
        T = [j for j in sorted(beta) if j not in N]
        lhs = sum(beta[j] for j in T)
        rhs = sum(alpha[i] for i in g.neighbours(T) if i in alpha)
        cert = {"violated": "subset T", "set": T, "lhs": lhs, "rhs": rhs}
    return DomainVerdict(False, cert, route, notes)


def decide(c, g: BipartiteGraph, route: str = "subsets") -> DomainVerdict:
    if g.has_kernel:
        return membership_with_kernel(c, g, route)
    return membership(c, g, route)


def replay_certificate(c, g: BipartiteGraph, v: DomainVerdict) -> bool:
    """Member: the plan reproduces the masses. Non-member: the cited constraint is violated."""
    c = list(c)
    exact = _exact(c)
    alpha, beta = _masses(c, g)
    cert = v.certificate
    if v.member:
        plan = cert["plan"]
        if not g.has_kernel:
            return replay_plan(alpha, beta, g.edges, plan)
        # flow through the source and sink is free; every other marginal is prescribed
        if not (_le(1, cert["c0"], exact) and _le(cert["c_m1"], 0, exact)):
            return False
        if any(e not in g.edges or x < 0 for e, x in plan.items()):
            return False
        for i, a in alpha.items():
            if not _eq(sum(x for (s, _), x in plan.items() if s == i), a, exact, 1 + a):
                return False
        for j, b in beta.items():
            if not _eq(sum(x for (_, t), x in plan.items() if t == j), b, exact, 1 + b):
                return False
        return True
    kind = cert["violated"]
    if kind == "c_i>=1":
        return c[cert["index"] - 1] < 1 if exact else c[cert["index"] - 1] < 1 - 1e-9
    if kind == "homogeneity":
        return not _eq(sum(c), g.m_plus, exact, sum(c))
    if kind == "subset S":
        S = cert["set"]
        if g.sink and (g.m + 1) in g.neighbours(S):
            return False
        lhs = sum(alpha[i] for i in S)
        rhs = sum(beta[j] for j in g.neighbours(S) if j in beta)
        return not _le(lhs, rhs, exact, lhs)
    if kind == "subset T":
        T = cert["set"]
        if g.source and 0 in g.neighbours(T):
            return False
        lhs = sum(beta[j] for j in T)
        rhs = sum(alpha[i] for i in g.neighbours(T) if i in alpha)
        return not _le(lhs, rhs, exact, lhs)
    return False


# ---- generators, cone route and facets ---------------------------------

def generators(g: BipartiteGraph):
    m = g.m
    gens = []
    for i, j in sorted(g.edges):
        if 1 <= i <= g.m_plus and g.m_plus < j <= m:
            v = [0] * m
            v[i - 1], v[j - 1] = 1, -1
            gens.append(v)
    for i, j in sorted(g.edges):
        if j == m + 1 and i >= 1:
            v = [0] * m
            v[i - 1] = 1
            gens.append(v)
        if i == 0 and j <= m:
            v = [0] * m
            v[j - 1] = -1
            gens.append(v)
    return gens


def cone_membership(c, g: BipartiteGraph) -> bool:
    """c - 1_[1,m+] in the cone spanned by the generators (LP feasibility)."""
    m = g.m
    target = np.array([float(x) for x in c]) - np.array([1.0] * g.m_plus + [0.0] * (m - g.m_plus))
    gens = generators(g)
    if not gens:
        return bool(np.abs(target).max(initial=0.0) <= 1e-9)
    G = np.array(gens, float).T
    res = linprog(np.zeros(G.shape[1]), A_eq=G, b_eq=target, bounds=[(0, None)] * G.shape[1],
                  method="highs")
    return res.status == 0


def _candidate_inequalities(g: BipartiteGraph):
    """Half-spaces a.c <= b: S family, T family, sign constraints, c_i >= 1 (pruning order)."""
    m, mp = g.m, g.m_plus
    left = list(range(1, mp + 1))
    right = list(range(mp + 1, m + 1))
    out = []
    for r in range(len(right), 0, -1):
        for T in combinations(right, r):
            if g.source and 0 in g.neighbours(T):
                continue
            a = [0] * m
            for j in T:
                a[j - 1] = -1
            N = [i for i in g.neighbours(T) if 1 <= i <= mp]
            for i in N:
                a[i - 1] = -1
            out.append((a, -len(N), f"T={list(T)}"))
    for r in range(len(left), 0, -1):
        for S in combinations(left, r):
            if g.sink and (m + 1) in g.neighbours(S):
                continue
            a = [0] * m
            for i in S:
                a[i - 1] = 1
            for j in g.neighbours(S):
                if j <= m:
                    a[j - 1] = 1
            out.append((a, len(S), f"S={list(S)}"))
    for j in right:
        a = [0] * m
        a[j - 1] = 1
        out.append((a, 0, f"c_{j}<=0"))
    for i in left:
        a = [0] * m
        a[i - 1] = -1
        out.append((a, -1, f"c_{i}>=1"))
    return out


def facets(g: BipartiteGraph) -> Facets:
    m, mp = g.m, g.m_plus
    eqs = [] if g.has_kernel else [([1] * m, mp)]
    cands = _candidate_inequalities(g)
    # drop exact duplicates, keeping the later (preferred) entry
    seen = {}
    for idx, (a, b, tag) in enumerate(cands):
        seen[(tuple(a), b)] = idx
    keep = [cands[i] for i in sorted(set(seen.values()))]
    i = 0
    while i < len(keep):
        a, b, _ = keep[i]
        others = keep[:i] + keep[i + 1:]
        A_ub = np.array([o[0] for o in others], float) if others else None
        b_ub = np.array([o[1] for o in others], float) if others else None
        A_eq = np.array([e[0] for e in eqs], float) if eqs else None
        b_eq = np.array([e[1] for e in eqs], float) if eqs else None
        res = linprog(-np.array(a, float), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=[(None, None)] * m, method="highs")
        if res.status == 0 and -res.fun <= b + 1e-9:
            keep.pop(i)
        else:
            i += 1
    ineqs = [(a, b) for a, b, _ in keep]
    return Facets([1] * mp + [0] * (m - mp), generators(g), ineqs, eqs)
