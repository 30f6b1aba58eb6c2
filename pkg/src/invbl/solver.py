"""Gaussian evaluation of J and maximisation of the determinant ratio D."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .classify import classify, eigen_decomposition
from .problem import Decomposition, Problem, b_plus, validate

TOL_STAT = 1e-9
MAX_ITER = 10_000
COND_LIMIT = 3e-8  # on Cholesky diagonals, i.e. condition number ~1e15


@dataclass
class SolveResult:
    status: str
    D: float
    inf_cg: float
    argmax: list | None
    residual: float
    iterations: int
    dual_constant: float
    log_D: float = float("nan")
    case: str = ""
    notes: list = field(default_factory=list)
    certificate: dict | None = None


@dataclass
class ShiftForm:
    matrix: np.ndarray
    psd: bool


# ---- evaluation --------------------------------------------------------

def _inner(p: Problem, blocks):
    A = p.Q.copy()
    for k in p.active:
        B = p.B[k]
        A += p.c[k] * B.T @ blocks[k] @ B
    return (A + A.T) / 2


def _logdet_pd(M):
    """log det of a symmetric matrix, or None when it is not positive definite."""
    if M.shape[0] == 0:
        return 0.0
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None
    d = np.diag(L)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        return None
    # past this spread the factorisation is rounding noise, not a PD certificate
    if d.min() < COND_LIMIT * d.max():
        return None
    return 2.0 * float(np.sum(np.log(d)))


def _check_blocks(p: Problem, blocks):
    if len(blocks) != p.m:
        raise ValueError(f"expected {p.m} blocks, got {len(blocks)}")
    out = []
    for k, Ak in enumerate(blocks):
        Ak = np.atleast_2d(np.asarray(Ak, float)) if p.dims[k] else np.zeros((0, 0))
        if Ak.shape != (p.dims[k], p.dims[k]):
            raise ValueError(f"block {k + 1} must be {p.dims[k]}x{p.dims[k]}")
        Ak = (Ak + Ak.T) / 2
        if p.dims[k] and np.linalg.eigvalsh(Ak).min() <= 0:
            raise ValueError(f"block {k + 1} is not positive definite")
        out.append(Ak)
    return out


def log_ratio(p: Problem, blocks) -> float:
    """Phi = log det(Q + sum c_k B_k^T A_k B_k) - sum c_k log det A_k; -inf outside Lambda."""
    ld = _logdet_pd(_inner(p, blocks))
    if ld is None:
        return -math.inf
    for k in p.active:
        ldk = _logdet_pd(blocks[k])
        if ldk is None:
            return -math.inf
        ld -= p.c[k] * ldk
    return ld


def evaluate_gaussian(p: Problem, t) -> float:
    p = validate(p)
    blocks = _check_blocks(p, t)
    phi = log_ratio(p, blocks)
    if phi == -math.inf:
        return math.inf
    return math.exp(-0.5 * phi) if phi > -1400 else math.inf


def stationarity_residual(p: Problem, t) -> float:
    p = validate(p)
    blocks = _check_blocks(p, t)
    A = _inner(p, blocks)
    if _logdet_pd(A) is None:
        raise ValueError("tuple is outside the feasible set")
    Ainv = np.linalg.inv(A)
    r = 0.0
    for k in p.active:
        # whitened by A_k so that the residual does not shrink when the tuple escapes to infinity
        G = np.linalg.cholesky(blocks[k])
        Bt = G.T @ p.B[k]
        R = Bt @ Ainv @ Bt.T - np.eye(p.dims[k])
        r = max(r, float(np.linalg.norm(R)))
    return r


# ---- geodesic Newton machinery -----------------------------------------

def _sym_basis(n):
    """Columns: vec of an orthonormal basis of symmetric n x n matrices."""
    cols = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 1 / math.sqrt(2)
            cols.append(E.ravel())
    return np.array(cols).T if cols else np.zeros((0, 0))


class _Model:
    """Phi in normal coordinates Y -> (G_k e^{Y_k} G_k^T) around a base tuple."""

    def __init__(self, p: Problem):
        self.p = p
        self.act = p.active
        self.S = {k: _sym_basis(p.dims[k]) for k in self.act}
        self.sizes = [self.S[k].shape[1] for k in self.act]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)]).astype(int)
        self.dim = int(self.offsets[-1])

    def split(self, y):
        out = {}
        for i, k in enumerate(self.act):
            n = self.p.dims[k]
            out[k] = (self.S[k] @ y[self.offsets[i]:self.offsets[i + 1]]).reshape(n, n)
        return out

    def move(self, blocks, y, s=1.0):
        """Point reached from `blocks` along the geodesic with normal coordinates s*y."""
        Ys = self.split(s * y)
        new = list(blocks)
        for k, Y in Ys.items():
            G = np.linalg.cholesky(blocks[k])
            w, V = np.linalg.eigh(Y)
            if w.max(initial=0.0) > 700:
                return None
            E = (V * np.exp(w)) @ V.T
            M = G @ E @ G.T
            new[k] = (M + M.T) / 2
        return new

    def derivatives(self, blocks):
        """Gradient and Hessian of Phi at Y = 0 in the whitened chart."""
        p = self.p
        Bt = {}
        for k in self.act:
            G = np.linalg.cholesky(blocks[k])
            Bt[k] = G.T @ p.B[k]
        A = _inner(p, blocks)
        Ainv = np.linalg.inv(A)
        Ainv = (Ainv + Ainv.T) / 2
        g = np.zeros(self.dim)
        H = np.zeros((self.dim, self.dim))
        P = {}
        for k in self.act:
            for l in self.act:
                P[k, l] = Bt[k] @ Ainv @ Bt[l].T
        for i, k in enumerate(self.act):
            nk = p.dims[k]
            ck = p.c[k]
            sk = slice(self.offsets[i], self.offsets[i + 1])
            g[sk] = ck * self.S[k].T @ (P[k, k] - np.eye(nk)).ravel()
            T = np.einsum("eb,cd->bcde", P[k, k], np.eye(nk)).reshape(nk * nk, nk * nk)
            H[sk, sk] += ck * self.S[k].T @ ((T + T.T) / 2) @ self.S[k]
            for j, l in enumerate(self.act):
                nl = p.dims[l]
                sl = slice(self.offsets[j], self.offsets[j + 1])
                T2 = np.einsum("bc,ad->abcd", P[k, l], P[k, l]).reshape(nk * nk, nl * nl)
                H[sk, sl] -= ck * p.c[l] * self.S[k].T @ T2 @ self.S[l]
        H = (H + H.T) / 2
        return g, H


def _tr_step(g, H, radius):
    """Maximise g.y + y.H.y/2 over |y| <= radius (eigen-based trust region)."""
    w, V = np.linalg.eigh(-H)
    b = V.T @ g
    scale = max(1.0, np.abs(w).max(initial=0.0))
    mu0 = max(0.0, -w.min()) + 1e-12 * scale

    def y_of(mu):
        return V @ (b / (w + mu))

    y = y_of(mu0)
    if np.linalg.norm(y) <= radius:
        return y
    lo, hi = mu0, mu0 + np.linalg.norm(g) / radius + 1.0
    while np.linalg.norm(y_of(hi)) > radius:
        hi *= 2
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm(y_of(mid)) > radius:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return y_of(hi)


def _ray_certificate(model, blocks, direction, length=4.0, delta=1e-3, doublings=5):
    """Slope of Phi along a geodesic ray stays >= delta (and does not decay) over doublings.

    The ray starts at `blocks` and its step lengths double up to `length`.
    """
    p = model.p
    nrm = np.linalg.norm(direction)
    if not nrm > 0:
        return None
    u = direction / nrm
    ts = [0.0] + [length * 2.0 ** (j - doublings) for j in range(doublings + 1)]
    vals = []
    for t in ts:
        pt = model.move(blocks, u, t) if t else blocks
        if pt is None:
            return None
        v = log_ratio(p, pt)
        if not math.isfinite(v):
            return None
        vals.append(v)
    slopes = [(vals[j + 1] - vals[j]) / (ts[j + 1] - ts[j]) for j in range(1, doublings + 1)]
    # a concave Phi approaching a finite max shows a decaying slope; a linear escape does not
    if min(slopes) >= delta and slopes[-1] >= 0.5 * slopes[0]:
        return {"direction": u.tolist(), "steps": ts[1:], "phi": vals[1:], "slopes": slopes}
    return None


def _chord(model, anchor, blocks):
    """Normal coordinates at `blocks` of the geodesic that arrives there from `anchor`, continued outward."""
    y = np.zeros(model.dim)
    for i, k in enumerate(model.act):
        G = np.linalg.cholesky(blocks[k])
        Gi = np.linalg.inv(G)
        W = Gi @ anchor[k] @ Gi.T
        w, V = np.linalg.eigh((W + W.T) / 2)
        if w.min() <= 0:
            return None
        Y = -(V * np.log(w)) @ V.T
        y[model.offsets[i]:model.offsets[i + 1]] = model.S[k].T @ Y.ravel()
    return y


def _escape(model, anchor, blocks, step):
    for y in (_chord(model, anchor, blocks), step):
        if y is not None:
            cert = _ray_certificate(model, blocks, y)
            if cert is not None:
                return cert
    return None


# ---- initialisation ----------------------------------------------------

def initial_tuple(p: Problem):
    """Scaled identities: s*Id on positive factors, Id/s on the others, first feasible s."""
    for e in range(0, 16):
        s = 10.0 ** e
        blocks = [np.eye(n) * (s if c > 0 else 1 / s) for n, c in zip(p.dims, p.c)]
        if math.isfinite(log_ratio(p, blocks)):
            return blocks
    return None


def _random_start(p: Problem, base, rng, spread=1.0):
    model = _Model(p)
    for _ in range(50):
        y = rng.normal(scale=spread, size=model.dim)
        pt = model.move(base, y)
        if pt is not None and math.isfinite(log_ratio(p, pt)):
            return pt
        spread /= 2
    return base


# ---- main loops --------------------------------------------------------

def _fixed_point(p: Problem, blocks, phi, max_iter):
    """Damped A_k <- (1-eta) A_k + eta (B_k A^{-1} B_k^T)^{-1}; stops on stall."""
    eta = 1.0
    it = 0
    small = 0
    while it < max_iter:
        it += 1
        Ainv = np.linalg.inv(_inner(p, blocks))
        target = list(blocks)
        for k in p.active:
            B = p.B[k]
            T = np.linalg.inv(B @ Ainv @ B.T)
            target[k] = (T + T.T) / 2
        while eta >= 1e-4:
            trial = list(blocks)
            for k in p.active:
                trial[k] = (1 - eta) * blocks[k] + eta * target[k]
            v = log_ratio(p, trial)
            if v >= phi:
                break
            eta /= 2
        else:
            return blocks, phi, it
        gain = v - phi
        blocks, phi = trial, v
        small = small + 1 if gain < 1e-13 * max(1.0, abs(phi)) else 0
        if small >= 3:
            break
    return blocks, phi, it


def _ascent(p: Problem, blocks, phi, max_iter, tol, growth=4.0):
    """Trust-region Newton ascent of Phi along exponential curves.

    Each time Phi climbs `growth` (then growth/2) above its start, try to
    certify an escape ray; the checkpoints are retried if the ascent stops.
    """
    model = _Model(p)
    anchor, phi0 = blocks, phi
    radius = 1.0
    next_check = phi0 + growth
    checkpoints = []
    it = 0
    stall = 0
    status = "max-iter"
    cert = None
    y = np.zeros(model.dim)
    while it < max_iter:
        it += 1
        if model.dim == 0:
            status = "converged"
            break
        g, H = model.derivatives(blocks)
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            status = "converged"
            break
        y = _tr_step(g, H, radius)
        pred = float(g @ y + 0.5 * y @ H @ y)
        pt = model.move(blocks, y)
        v = log_ratio(p, pt) if pt is not None else -math.inf
        if not math.isfinite(v) or v <= phi:
            radius /= 4
            stall += 1
            if radius < 1e-14 or stall > 60:
                status = "stalled"
                break
            continue
        rho = (v - phi) / pred if pred > 0 else 0.0
        if rho > 0.75 and np.linalg.norm(y) > 0.99 * radius:
            radius = min(2 * radius, 8.0)
        elif rho < 0.25:
            radius /= 4
        gain = v - phi
        blocks, phi = pt, v
        stall = stall + 1 if gain <= 1e-15 * max(1.0, abs(phi)) else 0
        if stall > 20:
            status = "stalled"
            break
        if phi > next_check:
            checkpoints.append((blocks, y))
            cert = _escape(model, anchor, blocks, y)
            if cert is not None:
                status = "unbounded"
                break
            next_check = phi + growth / 2
    if status in ("stalled", "max-iter") and phi > phi0 + 1:
        for b, step in [(blocks, y)] + checkpoints[::-1]:
            cert = _escape(model, anchor, b, step)
            if cert is not None:
                status = "unbounded"
                break
    return blocks, phi, it, status, cert


def _single_run(p, blocks, tol, max_iter):
    phi = log_ratio(p, blocks)
    blocks, phi, it1 = _fixed_point(p, blocks, phi, min(200, max_iter))
    blocks, phi, it2, status, cert = _ascent(p, blocks, phi, max_iter - it1, tol * 1e-2)
    return blocks, phi, it1 + it2, status, cert


def solve_D(p: Problem, tol: float = TOL_STAT, max_iter: int = MAX_ITER,
            multistart: int | None = None, seed: int = 0) -> SolveResult:
    p = validate(p)
    cl = classify(p)
    if not cl.facts["pd_on_ker_bplus"]:
        return SolveResult("infeasible", 0.0, math.inf, None, math.nan, 0, 0.0,
                           -math.inf, cl.case, ["feasible set is empty"])
    if cl.case == "Case100":
        return SolveResult("unbounded", math.inf, 0.0, None, math.nan, 0, math.inf,
                           math.inf, cl.case, ["B+ is not onto: determinant ratio blows up"])
    base = initial_tuple(p)
    if base is None:
        return SolveResult("max-iter", math.nan, math.nan, None, math.nan, 0, math.nan,
                           math.nan, cl.case, ["no feasible scaled-identity start found"])
    if multistart is None:
        multistart = 20 if cl.case == "Case101" else 1
    rng = np.random.default_rng(seed)
    best = None
    total = 0
    for run in range(multistart):
        start = base if run == 0 else _random_start(p, base, rng)
        blocks, phi, it, status, cert = _single_run(p, start, tol, max_iter)
        total += it
        if status == "unbounded":
            return SolveResult("unbounded", math.inf, 0.0, None, math.nan, total, math.inf,
                               math.inf, cl.case, [f"certified ascent ray in run {run}"], cert)
        if best is None or phi > best[1]:
            best = (blocks, phi, status)
    blocks, phi, status = best
    res = stationarity_residual(p, blocks)
    notes = []
    if res <= tol:
        out_status = "optimal"
    else:
        out_status = "max-iter"
        notes.append(f"ascent ended as {status} with residual {res:.3e}")
    D = math.exp(phi) if phi < 700 else math.inf
    return SolveResult(out_status, D, math.exp(-0.5 * phi), blocks, res, total,
                       math.exp(0.5 * phi) if phi < 1400 else math.inf, phi, cl.case, notes)


# ---- translated Gaussians ---------------------------------------------

def _stacked(p: Problem, d: Decomposition, blocks):
    """(B_k, c_k, A_k) for k = 0..m+1 including the kernel pieces."""
    items = [(d.B0, 1.0, d.Qplus)]
    items += [(p.B[k], p.c[k], blocks[k]) for k in range(p.m)]
    items.append((d.Bm1, -1.0, d.Qminus))
    return items


def evaluate_translated(p: Problem, d: Decomposition, t, shifts) -> float:
    p = validate(p)
    blocks = _check_blocks(p, t)
    items = _stacked(p, d, blocks)
    if len(shifts) != len(items):
        raise ValueError(f"expected {len(items)} shift vectors (k = 0..m+1)")
    us = []
    for (B, _, _), u in zip(items, shifts):
        u = np.asarray(u, float).reshape(-1)
        if u.shape[0] != B.shape[0]:
            raise ValueError("shift dimension does not match its factor")
        us.append(u)
    A = _inner(p, blocks)
    phi = log_ratio(p, blocks)
    if not math.isfinite(phi):
        return math.inf
    v = sum(c * B.T @ (Ak @ u) for (B, c, Ak), u in zip(items, us) if B.shape[0])
    v = np.zeros(p.dim) if np.isscalar(v) else v
    expo = float(v @ np.linalg.solve(A, v)) - sum(c * float(u @ Ak @ u) for (_, c, Ak), u in zip(items, us))
    log_val = -0.5 * phi + math.pi * expo
    return math.exp(log_val) if log_val < 700 else math.inf


def shift_form(p: Problem, d: Decomposition, t) -> ShiftForm:
    p = validate(p)
    blocks = _check_blocks(p, t)
    A = _inner(p, blocks)
    if _logdet_pd(A) is None:
        raise ValueError("tuple is outside the feasible set")
    items = _stacked(p, d, blocks)
    W = np.hstack([c * B.T @ Ak if B.shape[0] else np.zeros((p.dim, 0)) for B, c, Ak in items])
    N = W.shape[1]
    Dg = np.zeros((N, N))
    o = 0
    for B, c, Ak in items:
        n = B.shape[0]
        Dg[o:o + n, o:o + n] = c * Ak
        o += n
    M = W.T @ np.linalg.solve(A, W) - Dg
    M = (M + M.T) / 2
    scale = max(1.0, np.abs(M).max(initial=0.0))
    psd = N == 0 or bool(np.linalg.eigvalsh(M).min() >= -1e-9 * scale)
    return ShiftForm(M, psd)


def any_decomposition(p: Problem) -> Decomposition:
    """The structured split in the non-degenerate case, the spectral one otherwise."""
    from .classify import decompose
    if classify(p).case == "Case11":
        return decompose(p)
    return eigen_decomposition(p.Q)


def quad_gap(maps, weights, t, ys) -> float:
    """<A^{-1}y, y> - sum c_k <A_k^{-1} y_k, y_k> with y = sum c_k B_k^T y_k."""
    maps = [np.atleast_2d(np.asarray(B, float)) for B in maps]
    n = maps[0].shape[1]
    A = np.zeros((n, n))
    y = np.zeros(n)
    rhs = 0.0
    for B, c, Ak, yk in zip(maps, weights, t, ys):
        Ak = np.atleast_2d(np.asarray(Ak, float))
        yk = np.asarray(yk, float).reshape(-1)
        A += c * B.T @ Ak @ B
        y += c * B.T @ yk
        rhs += c * float(yk @ np.linalg.solve(Ak, yk))
    A = (A + A.T) / 2
    if _logdet_pd(A) is None:
        raise ValueError("sum c_k B_k^T A_k B_k is not positive definite")
    return float(y @ np.linalg.solve(A, y)) - rhs


# ---- geometric data and covariance criterion --------------------------

def geometric_check(p: Problem, tol: float = 1e-9) -> bool:
    p = validate(p)
    n = p.dim
    S = p.Q.copy()
    for k in range(p.m):
        B = p.B[k]
        if np.abs(B @ B.T - np.eye(p.dims[k])).max(initial=0.0) > tol:
            return False
        S += p.c[k] * B.T @ B
    if np.abs(S - np.eye(n)).max(initial=0.0) > tol:
        return False
    return n >= la.signature(p.Q)[0] + sum(p.dims[: p.m_plus])


def cdp_problem(cov, dims, ps) -> Problem:
    """Geometric datum attached to a block covariance: B = whitened cov^{1/2}, c_k = 1/p_k."""
    cov = np.asarray(cov, float)
    n = cov.shape[0]
    if sum(dims) != n:
        raise ValueError("block dimensions must add up to the covariance size")
    offs = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    W = np.zeros((n, n))
    for k in range(len(dims)):
        sl = slice(offs[k], offs[k + 1])
        Sk = cov[sl, sl]
        if la.rank(Sk) < dims[k]:
            raise ValueError(f"diagonal block {k + 1} is singular")
        w, V = np.linalg.eigh(Sk)
        W[sl, sl] = (V / np.sqrt(w)) @ V.T
    T = W @ cov @ W
    w, V = np.linalg.eigh((T + T.T) / 2)
    if w.min() <= 0:
        raise ValueError("covariance must be positive definite")
    R = (V * np.sqrt(w)) @ V.T
    order = sorted(range(len(dims)), key=lambda k: ps[k] < 0)
    maps = [R[offs[k]:offs[k + 1]] for k in order]
    cs = [1.0 / ps[k] for k in order]
    Q = np.eye(n) - sum(c * B.T @ B for c, B in zip(cs, maps))
    return Problem(n, tuple(maps), tuple(cs), (Q + Q.T) / 2)


def cdp_check(cov, dims, ps) -> bool:
    """Sigma >= diag(p_k Sigma_k); when it holds the dimension condition must follow."""
    cov = np.asarray(cov, float)
    if any(p_ == 0 for p_ in ps):
        raise ValueError("exponents p_k must be nonzero")
    prob = cdp_problem(cov, dims, ps)
    offs = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    P = np.zeros_like(cov)
    for k, p_ in enumerate(ps):
        sl = slice(offs[k], offs[k + 1])
        P[sl, sl] = p_ * cov[sl, sl]
    M = cov - P
    holds = bool(np.linalg.eigvalsh((M + M.T) / 2).min() >= -1e-9 * max(1.0, np.abs(cov).max()))
    if holds:
        s_plus = la.signature(prob.Q)[0]
        if prob.dim < s_plus + sum(prob.dims[: prob.m_plus]):
            raise ArithmeticError("covariance condition holds but the dimension condition fails")
    return holds
