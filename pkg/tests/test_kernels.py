import os
import subprocess
import sys

import numpy as np
import pytest

from invbl import _kernels as K
from invbl import quadrature as qd
from invbl.datasets import hypercontractivity

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


def _grid_args(p, fs, N=41):
    T, _, _ = qd._coordinates(p, None)
    packed = qd._pack(p, fs, T)
    lo = np.full(p.dim, -3.0)
    hi = np.full(p.dim, 3.0)
    h = (hi - lo) / N
    nodes = lo[:, None] + (np.arange(N)[None, :] + 0.5) * h[:, None]
    return (nodes, np.full(p.dim, N, np.int64), T.T @ p.Q @ T) + packed


CASES = [
    (hypercontractivity(0.25), [qd.box([-1], [1]), qd.cauchy(1)]),
    (hypercontractivity(0.2), [qd.gaussian([[0.3]]), qd.gaussian_floor([[2.0]], 0.3)]),
    (hypercontractivity(0.25), [qd.shifted(qd.box([0], [2]), [0.5]), qd.shifted(qd.cauchy(1, 2.0), [1.0])]),
]


@needs_numba
@pytest.mark.parametrize("p,fs", CASES)
def test_grid_sum_backends_agree(p, fs):
    args = _grid_args(p, fs)
    a, na = K.grid_sum_np(*args)
    b, nb = K.grid_sum_nb(*args)
    assert na == nb and abs(a - b) <= 1e-12 * abs(a)


@needs_numba
def test_grid_sum_counts_infinities_alike():
    from invbl import Problem
    p = Problem(1, (np.eye(1), np.eye(1)), (1.0, -1.0))
    args = _grid_args(p, [qd.gaussian([[1.0]]), qd.box([0.0], [1.0])])
    assert K.grid_sum_np(*args)[1] == K.grid_sum_nb(*args)[1] > 0


@needs_numba
def test_diag_search_backends_agree(rng):
    for _ in range(5):
        n = 3
        rows = rng.normal(size=(4, n))
        w = np.array([1.5, 1.0, 0.8, -0.4])
        Q = np.diag(rng.uniform(-0.2, 0.5, size=n))
        grid = np.linspace(-2, 2, 7) * np.log(10)
        a, ia = K.diag_grid_search_np(Q, rows, w, grid)
        b, ib = K.diag_grid_search_nb(Q, rows, w, grid)
        assert ia == ib and abs(a - b) <= 1e-9 * max(1.0, abs(a))


def test_env_flag_forces_numpy():
    env = dict(os.environ, INVBL_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import invbl._kernels as K; print(K.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_numpy_backend_end_to_end():
    code = ("import math; from invbl import quadrature as qd; from invbl.datasets import hypercontractivity as h;"
            "g = 1/(2*math.pi); print(repr(float(qd.quadrature_J(h(0.25), [qd.gaussian([[g]])]*2).value)))")
    env = dict(os.environ, INVBL_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    import math
    g = 1 / (2 * math.pi)
    here = qd.quadrature_J(hypercontractivity(0.25), [qd.gaussian([[g]])] * 2).value
    assert abs(float(out.stdout) - here) <= 1e-12 * here
