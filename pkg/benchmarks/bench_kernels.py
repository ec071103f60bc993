"""Compiled vs pure-Python kernels on the two hot loops.

    python3 benchmarks/bench_kernels.py [--draws N] [--repeat R]

Times the index-information quadrature over a batch of Rayleigh sigma
vectors and the Monte-Carlo log-ratio kernel, and checks the backends agree.
"""
import argparse
import time

import numpy as np

from imcap import _pykernels
from imcap.core import sigma_vector
from imcap.reference import DEFAULT_SETTINGS, mc_generator

try:
    from imcap import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled extension not built; reinstall with a C compiler available")

    rng = mc_generator(1, 0)
    st = DEFAULT_SETTINGS
    print(f"{'kernel':<28}{'t':>3}{'python s':>11}{'cython s':>11}{'speedup':>9}{'max rel diff':>14}")
    for t in (2, 4, 8):
        H = (rng.standard_normal((args.draws, 2, t)) + 1j * rng.standard_normal((args.draws, 2, t))) / np.sqrt(2)
        S = sigma_vector(H, 100.0)
        tp, vp = best_of(lambda: _pykernels.index_mi_batch(S, st.rel_tol, st.max_subdivisions, st.u_max)[0], args.repeat)
        tc, vc = best_of(lambda: _ckernels.index_mi_batch(S, st.rel_tol, st.max_subdivisions, st.u_max)[0], args.repeat)
        diff = np.max(np.abs(vp - vc) / np.maximum(np.abs(vp), 1e-300))
        print(f"{'index_mi_batch':<28}{t:>3}{tp:>11.4f}{tc:>11.4f}{tp / tc:>8.1f}x{diff:>14.1e}")

    n = 10**6
    for t in (2, 8):
        s = 1 + 100.0 * rng.exponential(1.0, t)
        labels = rng.integers(0, t, n)
        expo = rng.standard_exponential(n)
        tp, vp = best_of(lambda: _pykernels.mc_log_ratio(s, labels, expo), args.repeat)
        tc, vc = best_of(lambda: _ckernels.mc_log_ratio(s, labels, expo), args.repeat)
        diff = np.max(np.abs(vp - vc) / np.maximum(np.abs(vp), 1e-12))
        print(f"{'mc_log_ratio (1e6 samples)':<28}{t:>3}{tp:>11.4f}{tc:>11.4f}{tp / tc:>8.1f}x{diff:>14.1e}")


if __name__ == "__main__":
    main()
