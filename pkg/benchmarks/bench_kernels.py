"""Compare the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--sizes 64,200,400] [--repeat 5]

Prints one line per (kernel, size) with the best-of-``repeat`` wall time for
each backend and the speedup. Exits with status 1 if the extension is not built.
"""

import argparse
import math
import sys
import timeit

import numpy as np

from bromimo import _pykernels

try:
    from bromimo import _ext
except ImportError:  # pragma: no cover - depends on the build
    _ext = None


def bro_problem(n, beta=1.5, rho_d=8.0, seed=0):
    # same scaling as a BRO decode at this size
    rng = np.random.default_rng(seed)
    m = round(beta * n)
    A = rng.standard_normal((m, n))
    x0 = rng.choice([-1.0, 1.0], n)
    y = math.sqrt(rho_d / n) * A @ x0 + rng.standard_normal(m)
    c = math.sqrt(rho_d / n)
    P = (2 * c * c / n) * (A.T @ A)
    q = (2 * c / n) * (A.T @ y)
    L = float(np.linalg.eigvalsh(P)[-1]) * (1 + 1e-12)
    return P, q, L


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,200,400")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ext is None:
        print("compiled extension bromimo._ext is not built", file=sys.stderr)
        return 1

    print(f"{'kernel':<12} {'n':>5} {'iters':>6} {'cython [ms]':>12} {'python [ms]':>12} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        P, q, L = bro_problem(n)
        x0 = np.zeros(n)
        _, iters, _, _ = _ext.box_qp_apg(P, q, x0, L, 1e-8, 20000)
        tc = best_of(lambda: _ext.box_qp_apg(P, q, x0, L, 1e-8, 20000), args.repeat)
        tp = best_of(lambda: _pykernels.box_qp_apg(P, q, x0, L, 1e-8, 20000), args.repeat)
        print(f"{'box_qp_apg':<12} {n:>5} {iters:>6} {tc * 1e3:>12.3f} {tp * 1e3:>12.3f} {tp / tc:>8.2f}")

        lam = np.random.default_rng(1).uniform(0, 2, round(1.5 * n))
        num = np.ones_like(lam)
        reps = 2000
        tc = best_of(lambda: [_ext.saddle_sum(lam, num, 3.0, 2.0) for _ in range(reps)], args.repeat) / reps
        tp = best_of(lambda: [_pykernels.saddle_sum(lam, num, 3.0, 2.0) for _ in range(reps)], args.repeat) / reps
        print(f"{'saddle_sum':<12} {lam.size:>5} {'':>6} {tc * 1e3:>12.4f} {tp * 1e3:>12.4f} {tp / tc:>8.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
