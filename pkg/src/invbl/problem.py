"""The datum (H, (B_k, c_k), Q) and its validation."""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import linalg as la


def _as_rows(B, n):
    if B.ndim == 2 and B.shape[1] == n:
        return B
    if n == 0:
        return B.reshape(B.shape[0] if B.ndim else 0, 0)
    return B.reshape(-1, n)


class ValidationError(ValueError):
    """Raised when a datum violates the standing hypotheses."""


@dataclass(frozen=True, eq=False)
class Problem:
    """Kernel Q (pi convention) on R^dim, maps B_k with exponents c_k.

    Positive exponents come first; ``maps`` and ``kernel`` are float arrays,
    or Fraction object arrays when ``mode == "rational"``.
    """

    dim: int
    maps: tuple
    exponents: tuple
    kernel: np.ndarray = None
    mode: str = "float"
    validated: bool = field(default=False, compare=False)

    def __post_init__(self):
        conv = la.fraction_array if self.mode == "rational" else (lambda M: np.asarray(M, float))
        dt = object if self.mode == "rational" else float
        maps = tuple(conv(_as_rows(np.asarray(B, dtype=dt), self.dim)) for B in self.maps)
        object.__setattr__(self, "maps", maps)
        K = np.zeros((self.dim, self.dim)) if self.kernel is None else self.kernel
        object.__setattr__(self, "kernel", conv(K))
        cast = Fraction if self.mode == "rational" else float
        object.__setattr__(self, "exponents", tuple(cast(c) for c in self.exponents))

    @property
    def m(self) -> int:
        return len(self.maps)

    @cached_property
    def m_plus(self) -> int:
        return sum(1 for c in self.exponents if c > 0)

    @property
    def dims(self):
        return tuple(B.shape[0] for B in self.maps)

    @property
    def exact(self) -> bool:
        return self.mode == "rational"

    @cached_property
    def Q(self) -> np.ndarray:
        return la.float_array(self.kernel)

    @cached_property
    def B(self) -> tuple:
        return tuple(la.float_array(M) for M in self.maps)

    @cached_property
    def c(self) -> np.ndarray:
        return np.array([float(x) for x in self.exponents])

    @property
    def inert(self):
        return tuple(n == 0 or c == 0 for n, c in zip(self.dims, self.exponents))

    @property
    def active(self):
        return [k for k in range(self.m) if not self.inert[k]]

    def with_exponents(self, c) -> "Problem":
        return Problem(self.dim, self.maps, tuple(c), self.kernel, self.mode)


def validate(p: Problem) -> Problem:
    """Check surjectivity and the sign pattern; returns a symmetrised, validated copy."""
    if p.validated:
        return p
    n = p.dim
    if n < 0:
        raise ValidationError("dimension must be nonnegative")
    if len(p.exponents) != p.m:
        raise ValidationError("one exponent per factor is required")
    K = p.kernel
    if K.shape != (n, n):
        raise ValidationError(f"kernel must be {n}x{n}")
    Kf = la.float_array(K)
    if np.abs(Kf - Kf.T).max(initial=0.0) > la.TOL_RANK * max(1.0, np.abs(Kf).max(initial=0.0)):
        raise ValidationError("kernel matrix is not symmetric")
    if not np.all(np.isfinite(Kf)):
        raise ValidationError("kernel has non-finite entries")
    for k, B in enumerate(p.maps, start=1):
        if not np.all(np.isfinite(la.float_array(B))):
            raise ValidationError(f"map B_{k} has non-finite entries")
        if la.rank(B) != B.shape[0]:
            raise ValidationError(f"map B_{k} is not surjective")
    seen_nonpos = False
    for k, c in enumerate(p.exponents, start=1):
        if c <= 0:
            seen_nonpos = True
        elif seen_nonpos:
            raise ValidationError(f"sign pattern: positive exponent c_{k} follows a non-positive one")
    sym = (K + K.T) / 2 if not p.exact else (K + K.T) * Fraction(1, 2)
    out = Problem(n, p.maps, p.exponents, sym, p.mode, validated=True)
    return out


def b_plus(p: Problem, exact=None) -> np.ndarray:
    """Stack of B_1..B_{m+}; a 0 x n map when there are no positive factors."""
    exact = p.exact if exact is None else exact
    maps = p.maps if exact else p.B
    rows = [maps[i] for i in range(p.m_plus)]
    if not rows:
        return np.empty((0, p.dim), dtype=object if exact else float)
    return np.vstack(rows)


def b_zero_plus(p: Problem, d) -> np.ndarray:
    return np.vstack([d.B0, b_plus(p, exact=False)])


# GaussTuple: one SPD block per factor (list of arrays).
GaussTuple = list


@dataclass
class Decomposition:
    """Q = B0^T Qplus B0 - Bm1^T Qminus Bm1 with Qplus, Qminus positive definite."""

    B0: np.ndarray
    Bm1: np.ndarray
    Qplus: np.ndarray
    Qminus: np.ndarray

    def residual(self, Q) -> float:
        R = Q - self.B0.T @ self.Qplus @ self.B0 + self.Bm1.T @ self.Qminus @ self.Bm1
        return float(np.abs(R).max(initial=0.0))
