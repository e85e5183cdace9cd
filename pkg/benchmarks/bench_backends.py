"""Time the numba and pure-numpy solver kernels on the same problems.

    python3 benchmarks/bench_backends.py [--sizes 200 800 2000] [--repeats 3] [--out bench.json]

Both backends receive identical inputs; the objective values are printed so
agreement can be eyeballed next to the timings.
"""
import argparse
import json
import statistics
import time

import numpy as np

from srbo import _qp_numpy, synth
from srbo.kernel import KernelSpec
from srbo.nusvm import make_oracle

try:
    from srbo import _qp_numba
except ImportError:  # numba not installed
    _qp_numba = None


def problem(n, kind, seed=0):
    data = synth.generate("gauss2", n // 2, seed)
    oracle = make_oracle(data, KernelSpec(kind, sigma=1.0))
    return oracle.matrix()


def run_numba(Q, nu, solver):
    n = Q.shape[0]
    idx = np.arange(n, dtype=np.intp)
    f = np.zeros(n)
    if solver == "dcdm":
        a = np.full(n, nu / n)
        _qp_numba.dcdm(Q, idx, f, a, nu, 1.0 / n, 1e-8, 10000)
    else:
        a = np.full(n, 1.0 / n)
        _qp_numba.smo(Q, idx, f, a, 1.0 / (nu * n), 1e-8, 10000)
    return a


def run_numpy(Q, nu, solver):
    n = Q.shape[0]
    f = np.zeros(n)
    diag = np.diag(Q).copy()
    if solver == "dcdm":
        a = np.full(n, nu / n)
        _qp_numpy.dcdm(Q.__getitem__, diag, f, a, nu, 1.0 / n, 1e-8, 10000)
    else:
        a = np.full(n, 1.0 / n)
        _qp_numpy.smo(Q.__getitem__, diag, f, a, 1.0 / (nu * n), 1e-8, 10000)
    return a


def timed(fn, repeats):
    out, times = None, []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 800, 2000])
    ap.add_argument("--kernels", nargs="+", default=["linear", "rbf"])
    ap.add_argument("--nu", type=float, default=0.5)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    if _qp_numba is not None:
        run_numba(np.eye(2), 0.5, "dcdm")  # compile outside the timings
        run_numba(np.eye(2), 0.5, "smo")
    rows = []
    print(f"{'solver':6} {'kernel':7} {'n':>6} {'numpy s':>9} {'numba s':>9} {'speedup':>8} {'|dF|':>9}")
    for kind in args.kernels:
        for n in args.sizes:
            Q = problem(n, kind)
            for solver in ("dcdm", "smo"):
                a_np, t_np = timed(lambda: run_numpy(Q, args.nu, solver), args.repeats)
                row = {"solver": solver, "kernel": kind, "n": n, "numpy_s": t_np}
                if _qp_numba is not None:
                    a_nb, t_nb = timed(lambda: run_numba(Q, args.nu, solver), args.repeats)
                    row["numba_s"] = t_nb
                    row["speedup"] = t_np / t_nb
                    row["objective_diff"] = abs(0.5 * a_np @ Q @ a_np - 0.5 * a_nb @ Q @ a_nb)
                rows.append(row)
                print(f"{solver:6} {kind:7} {n:6d} {t_np:9.4f} {row.get('numba_s', float('nan')):9.4f} "
                      f"{row.get('speedup', float('nan')):8.1f} {row.get('objective_diff', float('nan')):9.2e}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
