"""Time the numba kernels against their numpy fallbacks.

Kernel timings call both implementations directly in this process. The
end-to-end timing runs one benchmark per backend in a subprocess, because
the backend is fixed at import time by SUPERENSEMBLE_NO_NUMBA.

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from superensemble import rbfn, tree
from superensemble._accel import HAS_NUMBA


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_cases(rng, n):
    values = np.sort(rng.normal(size=n))
    labels = (rng.random(n) < 0.3).astype(np.int8)
    X = rng.normal(size=(n, 8))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(np.int8)
    t = tree.grow_tree(X, y, minsplit=max(2, n // 50))
    route_args = (X, t.feature, t.threshold, t.is_categorical, t.left, t.right, t.label)
    Z = rng.normal(size=(n, 12))
    k = 16
    net_args = (Z, rng.integers(0, 2, n).astype(np.float64), np.ones(n),
                rng.normal(size=(k, 12)), rng.uniform(0.5, 2.0, k), rng.normal(size=k), 0.1)
    return {
        "scan_numeric": (tree._scan_numeric_nb, tree._scan_numeric_np, (values, labels, 0)),
        "route": (tree._route_nb, tree._route_np, route_args),
        "rbf_gradients": (rbfn._gradients_nb, rbfn._gradients_np, net_args),
    }


def end_to_end(no_numba):
    env = dict(os.environ, SUPERENSEMBLE_NO_NUMBA="1" if no_numba else "0")
    code = ("import time;from superensemble import load_bundled, run_benchmark;"
            "d=load_bundled('pima');run_benchmark(d,repeats=1);"
            "t=time.perf_counter();run_benchmark(d,repeats=5);print(time.perf_counter()-t)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true", help="smaller inputs and fewer repeats")
    args = ap.parse_args()
    if not HAS_NUMBA:
        sys.exit("numba is unavailable (or disabled); nothing to compare")
    rng = np.random.default_rng(0)
    sizes = (1_000, 10_000) if args.quick else (1_000, 10_000, 100_000)
    repeat = 3 if args.quick else 7
    print(f"{'kernel':<14} {'n':>8} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for n in sizes:
        for name, (nb, npf, call_args) in kernel_cases(rng, n).items():
            t_nb = best_of(lambda: nb(*call_args), repeat)
            t_np = best_of(lambda: npf(*call_args), repeat)
            print(f"{name:<14} {n:>8} {t_nb * 1e3:>10.3f} {t_np * 1e3:>10.3f} {t_np / t_nb:>8.2f}")
    t_nb, t_np = end_to_end(False), end_to_end(True)
    print(f"\npima benchmark, 5 repeats: numba {t_nb:.2f}s, numpy {t_np:.2f}s")


if __name__ == "__main__":
    main()
