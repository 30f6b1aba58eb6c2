"""Hot loops: tensor-grid integrand sums and the diagonal log-grid search for D.

Each kernel has a numba version and a chunked numpy version with identical
semantics. Set INVBL_NO_NUMBA=1 to force numpy (numba is also skipped when it
is not installed).
"""
import math
import os

import numpy as np

KIND_BOX, KIND_GAUSSIAN, KIND_CAUCHY, KIND_GAUSSIAN_FLOOR = 0, 1, 2, 3
CHUNK = 1 << 16

try:
    if os.environ.get("INVBL_NO_NUMBA", "").strip() not in ("", "0"):
        raise ImportError("disabled by INVBL_NO_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


# ---- numpy versions ----------------------------------------------------

def _log_factor_np(kind, z, lo, hi, A, scale, eps):
    d = z.shape[1]
    if kind == KIND_BOX:
        inside = np.all((z >= lo[:d]) & (z <= hi[:d]), axis=1)
        return np.where(inside, 0.0, -np.inf)
    if kind == KIND_CAUCHY:
        return -np.sum(np.log(math.pi * scale * (1.0 + (z / scale) ** 2)), axis=1)
    q = np.einsum("pi,ij,pj->p", z, A[:d, :d], z)
    if kind == KIND_GAUSSIAN:
        return -math.pi * q
    tail = np.prod(1.0 / (math.pi * (1.0 + z ** 2)), axis=1)
    return np.log(np.exp(-math.pi * q) + eps * tail)


def _mesh_chunk(nodes, counts, start, stop):
    n = len(counts)
    idx = np.arange(start, stop)
    pts = np.empty((stop - start, n))
    for a in range(n - 1, -1, -1):
        pts[:, a] = nodes[a, idx % counts[a]]
        idx //= counts[a]
    return pts


def grid_sum_np(nodes, counts, QY, kinds, fdims, Bs, shifts, c, lo, hi, A, scale, eps):
    """Returns (sum of integrand over nodes, number of points where it is +inf)."""
    total = int(np.prod(counts))
    acc, n_inf = 0.0, 0
    for start in range(0, total, CHUNK):
        y = _mesh_chunk(nodes, counts, start, min(total, start + CHUNK))
        L = -math.pi * np.einsum("pi,ij,pj->p", y, QY, y)
        dead = np.zeros(len(y), bool)
        for k in range(len(kinds)):
            d = fdims[k]
            z = y @ Bs[k, :d].T - shifts[k, :d]
            lf = _log_factor_np(kinds[k], z, lo[k], hi[k], A[k], scale[k], eps[k])
            if c[k] > 0:
                dead |= np.isneginf(lf)
            with np.errstate(invalid="ignore"):
                L = L + c[k] * lf
        live = ~dead
        n_inf += int(np.sum(np.isposinf(L[live])))
        vals = np.exp(L[live & np.isfinite(L)])
        acc += float(vals.sum())
    return acc, n_inf


def _chol_logdet_np(M):
    sign, ld = np.linalg.slogdet(M)
    # slogdet sign alone cannot see an even number of negative eigenvalues
    pd = (sign > 0) & (np.linalg.eigvalsh(M)[..., 0] > 0)
    return np.where(pd, ld, -np.inf)


def diag_grid_search_np(Q, rows, w, loggrid):
    P = rows.shape[0]
    G = len(loggrid)
    total = G ** P
    outer = np.einsum("ri,rj->rij", rows, rows)
    best, best_idx = -np.inf, -1
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK))
        la_ = np.empty((len(idx), P))
        rest = idx.copy()
        for r in range(P - 1, -1, -1):
            la_[:, r] = loggrid[rest % G]
            rest //= G
        a = np.exp(la_)
        M = Q[None] + np.einsum("pr,rij->pij", a * w[None], outer)
        val = _chol_logdet_np(M) - la_ @ w
        j = int(np.argmax(val))
        if val[j] > best:
            best, best_idx = float(val[j]), int(idx[j])
    return best, best_idx


# ---- numba versions ----------------------------------------------------

if HAVE_NUMBA:
    @njit(cache=True, error_model="numpy")
    def grid_sum_nb(nodes, counts, QY, kinds, fdims, Bs, shifts, c, lo, hi, A, scale, eps):
        n = counts.shape[0]
        m = kinds.shape[0]
        total = 1
        for a in range(n):
            total *= counts[a]
        acc = 0.0
        n_inf = 0
        y = np.empty(n)
        z = np.empty(3)
        idx = np.zeros(n, np.int64)
        for a in range(n):
            y[a] = nodes[a, 0]
        for p in range(total):
            if p > 0:
                # odometer step, last axis fastest
                a = n - 1
                idx[a] += 1
                while idx[a] == counts[a]:
                    idx[a] = 0
                    y[a] = nodes[a, 0]
                    a -= 1
                    idx[a] += 1
                y[a] = nodes[a, idx[a]]
            L = 0.0
            for i in range(n):
                for j in range(n):
                    L -= math.pi * y[i] * QY[i, j] * y[j]
            dead = False
            for k in range(m):
                d = fdims[k]
                for i in range(d):
                    s = -shifts[k, i]
                    for j in range(n):
                        s += Bs[k, i, j] * y[j]
                    z[i] = s
                kind = kinds[k]
                if kind == 0:
                    lf = 0.0
                    for i in range(d):
                        if z[i] < lo[k, i] or z[i] > hi[k, i]:
                            lf = -np.inf
                elif kind == 2:
                    lf = 0.0
                    for i in range(d):
                        t = z[i] / scale[k]
                        lf -= math.log(math.pi * scale[k] * (1.0 + t * t))
                else:
                    q = 0.0
                    for i in range(d):
                        for j in range(d):
                            q += z[i] * A[k, i, j] * z[j]
                    if kind == 1:
                        lf = -math.pi * q
                    else:
                        tail = 1.0
                        for i in range(d):
                            tail /= math.pi * (1.0 + z[i] * z[i])
                        lf = math.log(math.exp(-math.pi * q) + eps[k] * tail)
                if c[k] > 0 and lf == -np.inf:
                    dead = True
                    break
                L += c[k] * lf
            if not dead:
                if L == np.inf:
                    n_inf += 1
                elif L == L:
                    acc += math.exp(L)
        return acc, n_inf

    @njit(cache=True, error_model="numpy")
    def _chol_logdet_nb(M, n):
        L = np.zeros((n, n))
        ld = 0.0
        for j in range(n):
            s = M[j, j]
            for k in range(j):
                s -= L[j, k] * L[j, k]
            if s <= 0.0:
                return -np.inf
            L[j, j] = math.sqrt(s)
            ld += 2.0 * math.log(L[j, j])
            for i in range(j + 1, n):
                t = M[i, j]
                for k in range(j):
                    t -= L[i, k] * L[j, k]
                L[i, j] = t / L[j, j]
        return ld

    @njit(cache=True, error_model="numpy")
    def diag_grid_search_nb(Q, rows, w, loggrid):
        P, n = rows.shape
        G = loggrid.shape[0]
        total = 1
        for _ in range(P):
            total *= G
        M = np.empty((n, n))
        best = -np.inf
        best_idx = -1
        for p in range(total):
            for i in range(n):
                for j in range(n):
                    M[i, j] = Q[i, j]
            pen = 0.0
            rest = p
            for r in range(P - 1, -1, -1):
                lg = loggrid[rest % G]
                rest //= G
                a = math.exp(lg) * w[r]
                pen += w[r] * lg
                for i in range(n):
                    for j in range(n):
                        M[i, j] += a * rows[r, i] * rows[r, j]
            val = _chol_logdet_nb(M, n) - pen
            if val > best:
                best = val
                best_idx = p
        return best, best_idx


def grid_sum(*args):
    if HAVE_NUMBA:
        acc, n_inf = grid_sum_nb(*args)
        return float(acc), int(n_inf)
    return grid_sum_np(*args)


def diag_grid_search(Q, rows, w, loggrid):
    args = (np.ascontiguousarray(Q, float), np.ascontiguousarray(rows, float),
            np.ascontiguousarray(w, float), np.ascontiguousarray(loggrid, float))
    if HAVE_NUMBA:
        best, idx = diag_grid_search_nb(*args)
        return float(best), int(idx)
    return diag_grid_search_np(*args)
