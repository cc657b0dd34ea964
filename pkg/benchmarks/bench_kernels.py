"""Compare the numba and numpy backends of the batched permutation refits.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints median wall time per call for each backend and the largest absolute
difference between their statistics.
"""

import argparse
import statistics
import time

import numpy as np

from plspower import kernels
from plspower.permtest import draw_permutations
from plspower.plsc import build_coding

CASES = [  # N, P, J, A
    (10, 30, 200, 1),
    (60, 30, 200, 2),
    (60, 30, 200, 4),
    (200, 100, 500, 3),
]


def make_case(N, P, J, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat([1, 2], N // 2)
    X = rng.standard_normal((N, P))
    X[labels == 2, :3] += 1.0
    X -= X.mean(axis=0)
    coding = build_coding(labels)
    perms = draw_permutations(labels, J, rng)
    f1 = coding.f0[labels == 1, 0][0]
    f2 = coding.f0[labels == 2, 0][0]
    F = np.where(perms == 1, f1, f2)
    return X, F, perms, coding.threshold


def timed(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    print(f"{'N':>5} {'P':>5} {'J':>5} {'A':>3}" + "".join(f" {b + ' ms':>11}" for b in backends)
          + "   max|diff|")
    for N, P, J, A in CASES:
        X, F, L, thr = make_case(N, P, J)
        row, outs = [], []
        for b in backends:
            row.append(1e3 * timed(lambda: kernels.class_stats(X, F, L, A, thr, backend=b),
                                   args.repeat))
            outs.append(kernels.class_stats(X, F, L, A, thr, backend=b)[0])
        diff = np.max(np.abs(outs[0] - outs[-1])[np.isfinite(outs[0])])
        print(f"{N:>5} {P:>5} {J:>5} {A:>3}" + "".join(f" {t:>11.3f}" for t in row)
              + f"   {diff:.1e}")


if __name__ == "__main__":
    main()
