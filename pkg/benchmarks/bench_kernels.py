"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 7] [--size 20531]

Each row is the median wall time over ``--repeat`` runs. The last section
times a full gate fit on a planted corpus with each backend swapped in.
"""

import argparse
import statistics
import time
from unittest import mock

import numpy as np

from slce import kernels, sparse
from slce.data import build_centroid_target
from slce.lce import LceConfig, fit_lce
from slce.synthetic import make_planted


def timeit(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def kernel_cases(size, rng):
    params = rng.normal(size=size)
    grad = rng.normal(size=size)
    G = rng.normal(size=(size, 50))
    X = rng.normal(size=(size, 50))
    weights = np.sort(np.abs(rng.normal(size=size)))[::-1].copy()

    def adam(ns):
        p, m, v = params.copy(), np.zeros(size), np.zeros(size)
        return lambda: ns.adam_update(p, grad, m, v, 1, 0.002, 0.9, 0.999, 1e-8)

    return {
        f"adam_update      d={size}": adam,
        f"gate_contraction d={size} n=50": lambda ns: lambda: ns.gate_contraction(G, X),
        f"max_ratio_cut    d={size}": lambda ns: lambda: ns.max_ratio_cut(weights, 1e-12),
    }


def gate_fit(ns, A, X, C, iters):
    def run():
        # optim and sparse both look kernels up on the module at call time
        with mock.patch.object(kernels, "gate_contraction", ns.gate_contraction), mock.patch.object(
            kernels, "adam_update", ns.adam_update
        ):
            sparse.fit_gates(A, X, C, 0.3, 10, iters)

    return run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--size", type=int, default=20531)
    ap.add_argument("--gate-iters", type=int, default=500)
    args = ap.parse_args()

    found = kernels.backends()
    names = list(found)
    print(f"backends: {', '.join(names)} (active: {kernels.BACKEND})")
    rng = np.random.default_rng(0)

    print(f"\n{'kernel':40s}" + "".join(f"{n:>12s}" for n in names) + "     speedup")
    for label, make in kernel_cases(args.size, rng).items():
        t = {n: timeit(make(ns), args.repeat) for n, ns in found.items()}
        speed = f"{t['python'] / t['cython']:8.2f}x" if "cython" in t else "       -"
        print(f"{label:40s}" + "".join(f"{1e3 * t[n]:10.3f}ms" for n in names) + f"  {speed}")

    ds, _ = make_planted(n_samples=100, n_features=2000, n_informative=10, separation=0.6, noise=0.3)
    ct = build_centroid_target(ds)
    A = fit_lce(ds.features, ct.targets, LceConfig(max_iterations=500)).A
    t = {n: timeit(gate_fit(ns, A, ds.features, ct.targets, args.gate_iters), 3) for n, ns in found.items()}
    label = f"fit_gates d=2000 n=100 {args.gate_iters + 10} steps"
    speed = f"{t['python'] / t['cython']:8.2f}x" if "cython" in t else "       -"
    print(f"{label:40s}" + "".join(f"{t[n]:11.3f}s" for n in names) + f"  {speed}")


if __name__ == "__main__":
    main()
