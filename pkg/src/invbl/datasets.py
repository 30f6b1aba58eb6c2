"""Named data and random generators used by the tests, the CLI and the benchmarks."""
from fractions import Fraction
import math

import numpy as np

from .problem import Problem


def hypercontractivity(s: float, c1: float = 2.0, c2: float = 2.0) -> Problem:
    """Reverse Ornstein-Uhlenbeck datum with s = e^{-2t}, maps x1 and x2."""
    r = math.sqrt(s)
    Q = np.array([[1 - (1 - s) * c1, -r], [-r, 1 - (1 - s) * c2]]) / (2 * math.pi * (1 - s))
    maps = (np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
    cs = (c1, c2)
    if c1 <= 0 < c2:
        maps, cs = maps[::-1], cs[::-1]
        Q = Q[::-1, ::-1].copy()
    return Problem(2, maps, cs, Q)


def reverse_young(p=0.5, q=1.0, r_dual=-1.0) -> Problem:
    """Convolution datum on R^2: f(x-y) g(y) h(x) with exponents 1/p, 1/q, 1/r'."""
    maps = [np.array([[1.0, -1.0]]), np.array([[0.0, 1.0]]), np.array([[1.0, 0.0]])]
    cs = [1 / p, 1 / q, 1 / r_dual]
    order = sorted(range(3), key=lambda k: cs[k] <= 0)
    return Problem(2, tuple(maps[k] for k in order), tuple(cs[k] for k in order))


def young_constant(t: float) -> float:
    """C_t = |t|^{1/t} / |t'|^{1/t'} with 1/t + 1/t' = 1 (C_1 = 1)."""
    if t == 1:
        return 1.0
    td = t / (t - 1)
    return abs(t) ** (1 / t) / abs(td) ** (1 / td)


def coordinate(c=(1, 1), rational=True) -> Problem:
    n = len(c)
    eye = np.eye(n, dtype=int)
    maps = tuple(eye[i:i + 1] for i in range(n))
    return Problem(n, maps, tuple(c), mode="rational" if rational else "float")


def random_orthonormal_rows(rng, k, n):
    G = rng.normal(size=(n, k))
    Qm, _ = np.linalg.qr(G)
    return Qm[:, :k].T


def random_geometric(rng, max_dim=6) -> Problem:
    """Random datum with B_k B_k^T = Id and Q = Id - sum c_k B_k^T B_k satisfying the dimension condition."""
    from . import linalg as la
    while True:
        n = int(rng.integers(1, max_dim + 1))
        m_plus = int(rng.integers(1, n + 1))
        # positive factors: disjoint blocks of a random orthonormal frame
        frame = random_orthonormal_rows(rng, n, n)
        cuts = np.sort(rng.choice(np.arange(1, n + 1), size=m_plus, replace=False))
        if cuts[-1] != n and rng.random() < 0.5:
            cuts[-1] = n
        starts = np.concatenate([[0], cuts[:-1]])
        maps = [frame[a:b] for a, b in zip(starts, cuts)]
        cs = [float(rng.uniform(1.0, 3.0)) for _ in maps]
        for _ in range(int(rng.integers(0, 3))):
            k = int(rng.integers(1, n + 1))
            maps.append(random_orthonormal_rows(rng, k, n))
            cs.append(-float(rng.uniform(0.05, 1.0)))
        Q = np.eye(n) - sum(c * B.T @ B for c, B in zip(cs, maps))
        p = Problem(n, tuple(maps), tuple(cs), (Q + Q.T) / 2)
        if n >= la.signature(p.Q)[0] + sum(p.dims[: p.m_plus]):
            return p


def _rand_frac(rng, lo, hi, den=4):
    return Fraction(int(rng.integers(round(lo * den), round(hi * den) + 1)), den)


def random_rank_one(rng, max_n=3, max_m=5, kernel=None):
    """Random rational rank-one datum: rows u_k, optional rank-one kernel pieces.

    Returns a rational Problem; exponents are drawn so that roughly half of the
    instances lie in the positivity domain.
    """
    while True:
        n = int(rng.integers(1, max_n + 1))
        with_kernel = rng.random() < 0.4 if kernel is None else kernel
        u0_present = with_kernel and n >= 2 and rng.random() < 0.7
        m_plus = n - 1 if u0_present else n
        if m_plus < 1:
            continue
        m = int(rng.integers(m_plus, max_m + 1))
        basis = np.eye(n, dtype=int)
        if rng.random() < 0.5:
            # an integer unimodular-ish change of basis keeps data small
            T = np.eye(n, dtype=int) + np.triu(rng.integers(-1, 2, size=(n, n)), 1)
            basis = T
        rows = [basis[i] for i in range(n)]
        us = rows[1:] if u0_present else rows
        u0 = rows[0] if u0_present else None
        neg = []
        for _ in range(m - m_plus):
            coeff = rng.integers(-1, 2, size=m_plus)
            coeff[rng.integers(m_plus)] = int(rng.choice([-1, 1]))
            v = sum(int(a) * u for a, u in zip(coeff, us))
            if u0_present and rng.random() < 0.4:
                v = v + int(rng.choice([-1, 1])) * u0
            neg.append(np.asarray(v))
        um1 = None
        if with_kernel and rng.random() < 0.7:
            coeff = rng.integers(-1, 2, size=m_plus)
            if not np.any(coeff):
                coeff[0] = 1
            um1 = sum(int(a) * u for a, u in zip(coeff, us))
        maps = tuple(np.array([list(map(int, u))]) for u in list(us) + neg)
        Q = np.zeros((n, n), dtype=int)
        if u0 is not None:
            Q = Q + np.outer(u0, u0)
        if um1 is not None:
            Q = Q - np.outer(um1, um1)
        if u0 is None and um1 is None and with_kernel:
            continue
        cs = [_rand_frac(rng, 1, 2.5) if rng.random() < 0.85 else _rand_frac(rng, 0.5, 1) for _ in range(m_plus)]
        cs += [-_rand_frac(rng, 0, 1.5) for _ in range(m - m_plus)]
        if not with_kernel and rng.random() < 0.8:
            # homogeneity: sum c = m_plus, adjust the last non-positive exponent or drop
            extra = sum(cs) - m_plus
            if m > m_plus:
                cs[-1] = cs[-1] - extra
                if cs[-1] > 0:
                    continue
            else:
                cs = [Fraction(1)] * m_plus
        return Problem(n, maps, tuple(cs), Q, mode="rational")


def random_general(rng, max_dim=4):
    """Random rational datum of general rank in the non-degenerate case."""
    from .classify import classify
    while True:
        n = int(rng.integers(2, max_dim + 1))
        s_plus = int(rng.integers(0, 2)) if n > 2 else 0
        left = n - s_plus
        dims = []
        while left > 0:
            d = int(rng.integers(1, left + 1))
            dims.append(d)
            left -= d
        M = rng.integers(-2, 3, size=(n, n))
        if abs(round(np.linalg.det(M))) < 1:
            continue
        rows = [M[i] for i in range(n)]
        u0 = rows[:s_plus]
        pos, o = [], s_plus
        for d in dims:
            pos.append(np.array(rows[o:o + d]))
            o += d
        n_neg = int(rng.integers(0, 3))
        neg = []
        for _ in range(n_neg):
            d = int(rng.integers(1, n + 1))
            B = rng.integers(-2, 3, size=(d, n))
            neg.append(B)
        Q = np.zeros((n, n), dtype=int)
        for r in u0:
            Q = Q + np.outer(r, r)
        if rng.random() < 0.4:
            # negative piece living on B+ coordinates
            r = sum(int(a) * row for a, row in zip(rng.integers(-1, 2, size=n - s_plus), rows[s_plus:]))
            if np.any(r):
                Q = Q - np.outer(r, r)
        cs = [_rand_frac(rng, 1, 2.5) for _ in pos] + [-_rand_frac(rng, 0.25, 1.5) for _ in neg]
        if s_plus == 0 and not np.any(Q) and rng.random() < 0.7:
            extra = sum(c * d for c, d in zip(cs, dims + [B.shape[0] for B in neg])) - n
            if neg:
                cs[-1] = cs[-1] - extra / neg[-1].shape[0]
                if cs[-1] > 0:
                    continue
        p = Problem(n, tuple(pos) + tuple(neg), tuple(cs), Q, mode="rational")
        try:
            if classify(p).case == "Case11":
                return p
        except ValueError:
            continue
