"""Compare the numba and numpy versions of the hot kernels.

    python3 benchmarks/bench_kernels.py
"""
import math
import time

import numpy as np

from invbl import _kernels as K
from invbl import quadrature as qd
from invbl.datasets import hypercontractivity


def _time(fn, *args, repeat=3):
    best = math.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def grid_sum_args(N):
    p = hypercontractivity(0.25)
    fs = [qd.box(-1, 1), qd.gaussian_floor([[0.5]], 0.1)]
    T = np.eye(2)
    packed = qd._pack(p, fs, T)
    lo, hi = np.array([-1.0, -6.0]), np.array([1.0, 6.0])
    h = (hi - lo) / N
    nodes = lo[:, None] + (np.arange(N)[None, :] + 0.5) * h[:, None]
    return (nodes, np.full(2, N, np.int64), p.Q) + packed


def search_args(points):
    p = hypercontractivity(0.25)
    rows, w = qd._diag_rows(p)
    rows = np.vstack([rows, rows, rows])
    w = np.concatenate([w, w, w]) / 3
    return p.Q, rows, w, np.linspace(-3, 3, points) * math.log(10)


def main():
    if not K.HAVE_NUMBA:
        print("numba unavailable (or INVBL_NO_NUMBA set); only numpy timings are shown")
    cases = [
        ("grid_sum 401^2", grid_sum_args(401), K.grid_sum_np, getattr(K, "grid_sum_nb", None)),
        ("diag_grid_search 6 params x 15", search_args(15), K.diag_grid_search_np,
         getattr(K, "diag_grid_search_nb", None)),
    ]
    print(f"{'kernel':34s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, args, f_np, f_nb in cases:
        t_np, r_np = _time(f_np, *args, repeat=1)
        if f_nb is None:
            print(f"{name:34s} {t_np:10.4f} {'-':>10s}")
            continue
        f_nb(*args)  # compile
        t_nb, r_nb = _time(f_nb, *args)
        diff = abs(r_np[0] - r_nb[0]) / max(1e-300, abs(r_np[0]))
        print(f"{name:34s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
