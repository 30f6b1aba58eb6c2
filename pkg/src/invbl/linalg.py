"""Subspaces, ranks and quadratic-form helpers in float or exact rational arithmetic.

Arrays with ``dtype=object`` holding :class:`fractions.Fraction` entries are
treated as exact; everything else is float64 and uses SVD ranks.
"""
from fractions import Fraction

import numpy as np

TOL_RANK = 1e-9
TOL_PD = 1e-9


def is_exact(M) -> bool:
    return isinstance(M, np.ndarray) and M.dtype == object


def fraction_array(M) -> np.ndarray:
    """Object array of Fractions (floats are converted exactly)."""
    M = np.asarray(M, dtype=object)
    out = np.empty(M.shape, dtype=object)
    for idx, x in np.ndenumerate(M):
        out[idx] = x if isinstance(x, Fraction) else Fraction(x)
    return out


def float_array(M) -> np.ndarray:
    if is_exact(M):
        return np.array(M.tolist(), dtype=float).reshape(M.shape)
    return np.asarray(M, dtype=float)


def _common(*mats):
    """Bring matrices to a shared arithmetic: exact only if all are exact."""
    if all(is_exact(M) for M in mats):
        return mats
    return tuple(float_array(M) for M in mats)


# ---- exact elimination -------------------------------------------------

def _rref(M: np.ndarray):
    """Reduced row echelon form of a Fraction matrix; returns (R, pivots)."""
    rows, cols = M.shape
    A = [list(M[i]) for i in range(rows)]
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
    R = np.empty((r, cols), dtype=object)
    for i in range(r):
        R[i] = A[i]
    return R, pivots


def _exact_null(M: np.ndarray) -> np.ndarray:
    rows, cols = M.shape
    if rows == 0:
        return _eye_exact(cols)
    R, piv = _rref(M)
    free = [c for c in range(cols) if c not in piv]
    N = np.empty((cols, len(free)), dtype=object)
    N[:] = Fraction(0)
    for k, f in enumerate(free):
        N[f, k] = Fraction(1)
        for i, p in enumerate(piv):
            N[p, k] = -R[i, f]
    return N


def _eye_exact(n):
    E = np.empty((n, n), dtype=object)
    E[:] = Fraction(0)
    for i in range(n):
        E[i, i] = Fraction(1)
    return E


# ---- rank and spaces ---------------------------------------------------

def _float_tol(s):
    return TOL_RANK * max(s[0] if len(s) else 0.0, 1.0)


def rank(M) -> int:
    if 0 in np.shape(M):
        return 0
    if is_exact(M):
        return len(_rref(M)[1])
    s = np.linalg.svd(np.asarray(M, float), compute_uv=False)
    return int(np.sum(s > _float_tol(s)))


def null_space(M) -> np.ndarray:
    """Columns spanning {x : Mx = 0}; orthonormal in float mode."""
    if is_exact(M):
        return _exact_null(M)
    M = np.asarray(M, float)
    rows, cols = M.shape
    if rows == 0 or cols == 0:
        return np.eye(cols)
    _, s, vt = np.linalg.svd(M)
    r = int(np.sum(s > _float_tol(s)))
    return vt[r:].T.copy()


def col_space(M) -> np.ndarray:
    """Columns spanning the image of M; orthonormal in float mode."""
    rows, cols = np.shape(M)
    if is_exact(M):
        if cols == 0:
            return np.empty((rows, 0), dtype=object)
        R, _ = _rref(M.T)
        return R.T.copy() if len(R) else np.empty((rows, 0), dtype=object)
    M = np.asarray(M, float)
    if cols == 0 or rows == 0:
        return np.zeros((rows, 0))
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > _float_tol(s)))
    return u[:, :r].copy()


class Subspace:
    """Linear subspace of R^n given by a column basis.

    Float bases are orthonormal; exact bases are the transposed reduced row
    echelon form, which makes them canonical.
    """

    __slots__ = ("ambient", "basis", "_key")

    def __init__(self, basis, ambient=None):
        basis = np.asarray(basis) if not isinstance(basis, np.ndarray) else basis
        if basis.ndim == 1:
            basis = basis.reshape(-1, 1)
        if ambient is None:
            ambient = basis.shape[0]
        if basis.shape[0] != ambient:
            raise ValueError("basis rows must equal the ambient dimension")
        self.ambient = int(ambient)
        self.basis = col_space(basis)
        self._key = None

    @property
    def exact(self):
        return is_exact(self.basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        U = float_array(self.basis)
        if self.exact and self.dim:
            U = np.linalg.qr(U)[0]
        return U @ U.T

    def key(self):
        """Hashable canonical tag (rounded projector in float mode)."""
        if self._key is None:
            if self.exact:
                self._key = (self.dim, tuple(self.basis.ravel().tolist()))
            else:
                P = np.round(self.projector(), 7) + 0.0
                self._key = (self.dim, P.tobytes())
        return self._key

    def __eq__(self, other):
        if not isinstance(other, Subspace) or other.ambient != self.ambient:
            return NotImplemented
        if self.dim != other.dim:
            return False
        if self.exact and other.exact:
            return self.key() == other.key()
        # sine of the largest principal angle
        return np.linalg.norm(self.projector() - other.projector(), 2) <= 1e3 * TOL_RANK

    def __hash__(self):
        return hash(self.key())

    def contains(self, other: "Subspace") -> bool:
        return subspace_sum(self, other).dim == self.dim

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"


def full_space(n, exact=False) -> Subspace:
    return Subspace(_eye_exact(n) if exact else np.eye(n), n)


def zero_space(n, exact=False) -> Subspace:
    return Subspace(np.empty((n, 0), dtype=object if exact else float), n)


def _check(a, b):
    if a.ambient != b.ambient:
        raise ValueError(f"ambient mismatch: {a.ambient} vs {b.ambient}")


def annihilator(V: Subspace) -> np.ndarray:
    """Rows whose common kernel is V."""
    return null_space(V.basis.T).T


def kernel(B) -> Subspace:
    return Subspace(null_space(B), np.shape(B)[1])


def image(B, V: Subspace | None = None) -> Subspace:
    if V is not None:
        B, U = _common(B, V.basis)
        return Subspace(B @ U if U.shape[1] else np.empty((B.shape[0], 0), dtype=B.dtype), B.shape[0])
    return Subspace(B, np.shape(B)[0])


def dim_image(B, V: Subspace) -> int:
    if V.dim == 0 or np.shape(B)[0] == 0:
        return 0
    B, U = _common(B, V.basis)
    return rank(B @ U)


def preimage(B, W: Subspace) -> Subspace:
    B, N = _common(B, annihilator(W))
    n = B.shape[1]
    if N.shape[0] == 0:
        return Subspace(_eye_exact(n) if is_exact(B) else np.eye(n), n)
    return kernel(N @ B)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    _check(a, b)
    A, B = _common(a.basis, b.basis)
    return Subspace(np.hstack([A, B]), a.ambient)


def intersect(a: Subspace, b: Subspace) -> Subspace:
    _check(a, b)
    Na, Nb = _common(annihilator(a), annihilator(b))
    n = a.ambient
    M = np.vstack([Na, Nb])
    if M.shape[0] == 0:
        return Subspace(_eye_exact(n) if is_exact(M) else np.eye(n), n)
    return kernel(M)


def sum_equals_space(a: Subspace, b: Subspace) -> bool:
    return subspace_sum(a, b).dim == a.ambient


# ---- quadratic forms ---------------------------------------------------

def _sym_float(Q):
    Q = float_array(Q)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError("quadratic form must be a square matrix")
    if np.abs(Q - Q.T).max(initial=0.0) > TOL_RANK * max(1.0, np.abs(Q).max(initial=0.0)):
        raise ValueError("quadratic form matrix is not symmetric")
    return (Q + Q.T) / 2


def signature(Q):
    """(s_plus, s_minus, s_zero) with eigenvalues in [-tol_pd, tol_pd] counted as zero."""
    Q = _sym_float(Q)
    if Q.shape[0] == 0:
        return 0, 0, 0
    w = np.linalg.eigvalsh(Q)
    sp = int(np.sum(w > TOL_PD))
    sm = int(np.sum(w < -TOL_PD))
    return sp, sm, len(w) - sp - sm


def restrict_form(Q, V: Subspace) -> np.ndarray:
    if np.shape(Q)[0] != V.ambient:
        raise ValueError("dimension mismatch between form and subspace")
    Q, U = _common(Q, V.basis)
    return U.T @ Q @ U


def _exact_pd(M) -> bool:
    """Positive definiteness of a symmetric Fraction matrix by pivots of elimination."""
    A = [list(r) for r in M]
    n = len(A)
    for k in range(n):
        if A[k][k] <= 0:
            return False
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            if f:
                A[i] = [x - f * y for x, y in zip(A[i], A[k])]
    return True


def is_pd_on_subspace(Q, V: Subspace) -> bool:
    if V.dim == 0:
        return True
    R = restrict_form(Q, V)
    if is_exact(R):
        return _exact_pd(R)
    if V.exact:
        # orthonormalise so the tolerance is measured on a comparable scale
        R = restrict_form(float_array(Q), Subspace(float_array(V.basis)))
    return bool(np.linalg.eigvalsh((R + R.T) / 2).min() > TOL_PD)


def q_orthogonal_complement(Q, V: Subspace) -> Subspace:
    if np.shape(Q)[0] != V.ambient:
        raise ValueError("dimension mismatch between form and subspace")
    if V.dim == 0:
        return full_space(V.ambient, exact=is_exact(Q) and V.exact)
    Q, U = _common(Q, V.basis)
    return kernel((Q @ U).T)


def radical(Q) -> Subspace:
    return kernel(Q)
