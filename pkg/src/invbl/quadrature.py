"""Brute-force oracles: tensor-grid quadrature of J, grid search and random probes of D."""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import _kernels as K
from . import linalg as la
from .classify import classify, decompose
from .problem import Problem, b_plus, validate
from .solver import evaluate_gaussian, log_ratio

TAIL = 27.63  # e^{-27.63} ~ 1e-12


@dataclass(frozen=True)
class TestFunction:
    """A function on R^dim: box indicator, Gaussian e^{-pi z.Az}, Cauchy product, or Gaussian plus Cauchy floor.

    ``shift`` translates the argument: f(z - shift).
    """

    __test__ = False  # not a pytest class

    kind: str
    dim: int
    lo: tuple = ()
    hi: tuple = ()
    A: np.ndarray | None = None
    scale: float = 1.0
    eps: float = 0.0
    shift: tuple = ()

    def integral(self) -> float:
        if self.kind == "box":
            return float(np.prod(np.subtract(self.hi, self.lo)))
        if self.kind == "cauchy":
            return 1.0
        g = float(np.linalg.det(np.atleast_2d(self.A))) ** -0.5
        return g + (self.eps if self.kind == "gaussian_floor" else 0.0)

    def __call__(self, z):
        z = np.atleast_2d(np.asarray(z, float)) - self._shift()
        lo, hi, A = self._params()
        return np.exp(K._log_factor_np(_KINDS[self.kind], z, lo, hi, A, self.scale, self.eps))

    def _shift(self):
        return np.asarray(self.shift, float) if len(self.shift) else np.zeros(self.dim)

    def _params(self):
        lo = np.zeros(3)
        hi = np.zeros(3)
        A = np.zeros((3, 3))
        if self.kind == "box":
            lo[: self.dim] = self.lo
            hi[: self.dim] = self.hi
        if self.A is not None:
            A[: self.dim, : self.dim] = np.atleast_2d(self.A)
        return lo, hi, A

    @property
    def strictly_positive(self):
        return self.kind != "box"


_KINDS = {"box": K.KIND_BOX, "gaussian": K.KIND_GAUSSIAN, "cauchy": K.KIND_CAUCHY,
          "gaussian_floor": K.KIND_GAUSSIAN_FLOOR}


def box(lo, hi) -> TestFunction:
    lo, hi = tuple(np.atleast_1d(lo).astype(float)), tuple(np.atleast_1d(hi).astype(float))
    if any(b <= a for a, b in zip(lo, hi)):
        raise ValueError("box must have positive volume")
    return TestFunction("box", len(lo), lo=lo, hi=hi)


def gaussian(A) -> TestFunction:
    A = np.atleast_2d(np.asarray(A, float))
    if np.linalg.eigvalsh(A).min() <= 0:
        raise ValueError("Gaussian matrix must be positive definite")
    return TestFunction("gaussian", A.shape[0], A=A)


def cauchy(dim=1, scale=1.0) -> TestFunction:
    if scale <= 0:
        raise ValueError("scale must be positive")
    return TestFunction("cauchy", dim, scale=float(scale))


def gaussian_floor(A, eps=0.1) -> TestFunction:
    g = gaussian(A)
    if eps <= 0:
        raise ValueError("floor must be positive")
    return replace(g, kind="gaussian_floor", eps=float(eps))


def shifted(f: TestFunction, s) -> TestFunction:
    s = tuple(np.atleast_1d(s).astype(float))
    if len(s) != f.dim:
        raise ValueError("shift dimension mismatch")
    return replace(f, shift=s)


@dataclass
class QuadratureResult:
    value: float
    error_bound: float
    grid: dict
    reason: str | None = None


def _coordinates(p: Problem, d):
    """Linear change x = T y and its Jacobian; y = B_{0+} x when the datum is non-degenerate."""
    if d is None and classify(p).case == "Case11":
        d = decompose(p)
    if d is not None:
        T0 = np.vstack([d.B0, b_plus(p, exact=False)])
        if T0.shape[0] == p.dim and abs(np.linalg.det(T0)) > la.TOL_RANK:
            blocks, o = [], d.B0.shape[0]
            for nk in p.dims[: p.m_plus]:
                blocks.append(list(range(o, o + nk)))
                o += nk
            return np.linalg.inv(T0), 1.0 / abs(np.linalg.det(T0)), blocks
    return np.eye(p.dim), 1.0, [None] * p.m_plus


def _ranges(p, fs, T, blocks, R):
    n = p.dim
    c = p.c
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for k in range(p.m_plus):
        f = fs[k]
        if f.kind == "box" and blocks[k] is not None:
            s = f._shift()
            for r, a in enumerate(blocks[k]):
                lo[a], hi[a] = f.lo[r] + s[r], f.hi[r] + s[r]
    free = ~np.isfinite(lo)
    if not free.any():
        return lo, hi, None
    if R is not None:
        lo[free], hi[free] = -R, R
        return lo, hi, None
    # Gaussian domination on the free axes
    M = p.Q.copy()
    growth = 0.0
    for k, f in enumerate(fs):
        if c[k] == 0:
            continue
        B = p.B[k]
        if f.kind == "gaussian" or (f.kind == "gaussian_floor" and c[k] < 0):
            M += c[k] * B.T @ f.A @ B
        if f.kind in ("cauchy", "gaussian_floor") and c[k] < 0:
            growth += 2 * abs(c[k]) * f.dim
    MY = T.T @ M @ T
    MY = (MY + MY.T) / 2
    Mff = MY[np.ix_(free, free)]
    w = np.linalg.eigvalsh(Mff)
    if w.min() <= la.TOL_PD:
        return lo, hi, "integrand is not dominated by a Gaussian on the unbounded axes"
    mu = w.min()
    bounded = ~free
    off = 0.0
    if bounded.any():
        zb = np.maximum(np.abs(lo[bounded]), np.abs(hi[bounded]))
        cross = np.linalg.solve(Mff, MY[np.ix_(free, bounded)])
        off = np.linalg.norm(cross, 2) * np.linalg.norm(zb)
    Tinv = np.linalg.inv(T)
    off += sum(np.linalg.norm(Tinv, 2) * np.linalg.norm(p.B[k].T @ f._shift()) for k, f in enumerate(fs)
               if f.kind != "box")
    r = math.sqrt(TAIL / (math.pi * mu))
    # push out until the Gaussian beats the polynomial growth of negative Cauchy-type factors
    while math.pi * mu * r * r - growth * math.log1p(r + off) < TAIL:
        r *= 1.1
    lo[free], hi[free] = -(r + off), r + off
    return lo, hi, None


def _pack(p, fs, T):
    m = len(fs)
    n = p.dim
    kinds = np.array([_KINDS[f.kind] for f in fs], np.int64)
    fdims = np.array([f.dim for f in fs], np.int64)
    Bs = np.zeros((m, 3, n))
    shifts = np.zeros((m, 3))
    lo = np.zeros((m, 3))
    hi = np.zeros((m, 3))
    A = np.zeros((m, 3, 3))
    for k, f in enumerate(fs):
        Bs[k, : f.dim] = p.B[k] @ T
        shifts[k, : f.dim] = f._shift()
        lo[k], hi[k], A[k] = f._params()
    scale = np.array([f.scale for f in fs])
    eps = np.array([f.eps for f in fs])
    return kinds, fdims, Bs, shifts, np.asarray(p.c, float), lo, hi, A, scale, eps


def _midpoint(lo, hi, N, packed, QY):
    n = len(lo)
    h = (hi - lo) / N
    nodes = lo[:, None] + (np.arange(N)[None, :] + 0.5) * h[:, None]
    counts = np.full(n, N, np.int64)
    acc, n_inf = K.grid_sum(nodes, counts, QY, *packed)
    return acc * float(np.prod(h)), n_inf


def quadrature_J(p: Problem, fs, N: int | None = None, R: float | None = None, d=None) -> QuadratureResult:
    """Midpoint tensor-grid value of J(f_1..f_m) with closed-form denominators.

    The error bound is the Richardson estimate |I_N - I_{N/2}| / 3 plus a
    truncation allowance.
    """
    p = validate(p)
    n = p.dim
    if n > 3:
        raise ValueError("quadrature oracle supports dim H <= 3")
    if len(fs) != p.m or any(f.dim != nk for f, nk in zip(fs, p.dims)):
        raise ValueError("one test function of matching dimension per factor")
    N = N or (201 if n <= 2 else 101)
    N += N % 2
    active = [k for k in range(p.m) if p.c[k] != 0]
    q = Problem(n, tuple(p.maps[k] for k in active), tuple(p.exponents[k] for k in active),
                p.kernel, p.mode, validated=True)
    fa = [fs[k] for k in active]
    T, jac, blocks = _coordinates(p, d)
    blocks = [blocks[k] for k in active if k < p.m_plus]
    lo, hi, why = _ranges(q, fa, T, blocks, R)
    grid = {"N": N, "lo": lo.tolist(), "hi": hi.tolist(), "backend": K.backend()}
    if why:
        return QuadratureResult(math.inf, math.inf, grid, why)
    QY = T.T @ q.Q @ T
    packed = _pack(q, fa, T)
    fine, inf_f = _midpoint(lo, hi, N, packed, QY)
    if inf_f:
        return QuadratureResult(math.inf, 0.0, grid,
                                "negative exponent against a vanishing factor without a dominating box")
    coarse, _ = _midpoint(lo, hi, N // 2, packed, QY)
    den = math.prod(f.integral() ** ck for f, ck in zip(fa, q.c))
    value = fine * jac / den
    err = abs(fine - coarse) * jac / den / 3 + 1e-10 * abs(value)
    return QuadratureResult(value, err, grid)


# ---- grid search and probes --------------------------------------------

def _diag_rows(p: Problem):
    rows, w = [], []
    for k in p.active:
        for r in p.B[k]:
            rows.append(r)
            w.append(p.c[k])
    return np.array(rows).reshape(-1, p.dim), np.array(w)


def grid_search_D(p: Problem, lo: float = -3.0, hi: float = 3.0, points: int = 25, return_argmax=False):
    """Max of the determinant ratio over diagonal A_k with entries on a log-spaced grid."""
    p = validate(p)
    rows, w = _diag_rows(p)
    if len(rows) > 6:
        raise ValueError("grid search supports at most 6 diagonal parameters")
    loggrid = np.linspace(lo, hi, points) * math.log(10)
    best, idx = K.diag_grid_search(p.Q, rows, w, loggrid)
    D = math.exp(best) if best > -math.inf else 0.0
    if not return_argmax:
        return D
    diag = []
    for _ in range(len(rows)):
        diag.append(math.exp(loggrid[idx % points]))
        idx //= points
    diag = diag[::-1]
    out, o = [], 0
    for k in p.active:
        nk = p.dims[k]
        out.append(np.diag(diag[o:o + nk]))
        o += nk
    return D, out


@dataclass
class ProbeResult:
    min_value: float
    samples: int
    below: int = 0
    suspicious: bool = False
    values: list = field(default_factory=list, repr=False)


def random_probe(p: Problem, infcg: float, n: int = 1000, seed: int = 0, tol: float = 1e-9) -> ProbeResult:
    """Min of J over random Gaussian tuples in Lambda; counts samples below infcg - tol."""
    p = validate(p)
    rng = np.random.default_rng(seed)
    vals = []
    attempts = 0
    while len(vals) < n and attempts < 100 * n:
        attempts += 1
        t = []
        for nk in p.dims:
            W = rng.normal(size=(nk, nk + 2))
            A = W @ W.T / (nk + 2) + 1e-3 * np.eye(nk)
            t.append(A * 10 ** rng.uniform(-2, 2))
        if log_ratio(p, t) == -math.inf:
            continue
        vals.append(evaluate_gaussian(p, t))
    if not vals:
        return ProbeResult(math.inf, 0, 0, True)
    below = sum(1 for v in vals if v < infcg - tol * max(1.0, abs(infcg)))
    return ProbeResult(min(vals), len(vals), below, False, vals)
