"""Timing comparison of the compiled and pure-Python kernel backends.

Covers the two kernels that differ between backends: isolation-tree
construction/scoring and the one-class SVM coordinate-descent solver. The
convolutional stack is BLAS-backed numpy in both backends and is not timed
here. Results are medians over repeated runs; both backends produce
bit-identical outputs, which is asserted before timing.

Usage: python3 benchmarks/bench_backends.py [--repeats N] [--quick]
"""

import argparse
import time

import numpy as np

from lingsel.iforest import build_c_table
from lingsel.kernels import available_backends, get_backend
from lingsel.numcore import SplitMix64, gamma_scale, rbf_gram


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return sorted(times)[len(times) // 2]


def make_data(n, d, seed):
    return SplitMix64(seed).gaussian_block(n * d).reshape(n, d)


def bench_forest_build(backend, data, psi, n_trees):
    height_limit = int(np.ceil(np.log2(psi)))

    def run():
        for t in range(n_trees):
            backend.iforest_build(data, psi, t + 1, height_limit)

    return run


def build_flat_forest(backend, data, psi, n_trees):
    height_limit = int(np.ceil(np.log2(psi)))
    trees = [
        backend.iforest_build(data, psi, t + 1, height_limit)
        for t in range(n_trees)
    ]
    parts = list(zip(*trees))
    offsets = np.zeros(n_trees + 1, dtype=np.int64)
    for i, tree in enumerate(trees):
        offsets[i + 1] = offsets[i] + tree[0].shape[0]
    flat = [np.concatenate(p) for p in parts]
    return (*flat, offsets, build_c_table(psi))


def bench_forest_score(backend, forest, queries):
    sd, sv, lc, rc, sz, offsets, table = forest

    def run():
        return backend.iforest_path_sums(sd, sv, lc, rc, sz, offsets, queries, table)

    return run


def smo_start(n, nu, K):
    upper = 1.0 / (nu * n)
    alpha = np.full(n, 1.0 / n)
    grad = K @ alpha
    return alpha, grad, upper


def bench_smo(backend, K, nu, tol, max_iter):
    n = K.shape[0]

    def run():
        alpha, grad, upper = smo_start(n, nu, K)
        return backend.smo_solve(K, alpha, grad, upper, tol, max_iter)

    return run


def check_agreement(backends, data, psi, K, nu):
    """Backends must agree bitwise before their timings mean anything."""
    if len(backends) < 2:
        return
    height_limit = int(np.ceil(np.log2(psi)))
    ref = None
    for backend in backends.values():
        tree = backend.iforest_build(data, psi, 7, height_limit)
        if ref is None:
            ref = tree
        else:
            assert all(np.array_equal(a, b) for a, b in zip(ref, tree))
    ref = None
    for backend in backends.values():
        alpha, grad, upper = smo_start(K.shape[0], nu, K)
        result = backend.smo_solve(K, alpha, grad, upper, 1e-6, 200_000)
        if ref is None:
            ref = (result, alpha.copy())
        else:
            assert result == ref[0]
            assert np.array_equal(alpha, ref[1])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument(
        "--quick", action="store_true", help="smaller problem sizes"
    )
    args = parser.parse_args()

    if args.quick:
        n_rows, dim, psi, n_trees, n_queries = 500, 16, 128, 50, 2000
        svm_n, nu = 300, 0.1
    else:
        n_rows, dim, psi, n_trees, n_queries = 2000, 32, 256, 200, 20000
        svm_n, nu = 1000, 0.05

    names = available_backends()
    backends = {name: get_backend(name) for name in names}
    print(f"backends: {', '.join(names)}")
    if "compiled" not in backends:
        print("note: compiled extension not built; timing python only")

    data = make_data(n_rows, dim, 1)
    queries = make_data(n_queries, dim, 2)
    svm_data = make_data(svm_n, 8, 3)
    K = rbf_gram(svm_data, svm_data, gamma_scale(svm_data))
    check_agreement(backends, data, psi, K, nu)

    cases = []
    for name, backend in backends.items():
        cases.append(
            (
                f"forest build ({n_trees} trees, psi={psi})",
                name,
                bench_forest_build(backend, data, psi, n_trees),
            )
        )
        forest = build_flat_forest(backend, data, psi, n_trees)
        cases.append(
            (
                f"forest score ({n_queries} queries)",
                name,
                bench_forest_score(backend, forest, queries),
            )
        )
        cases.append(
            (
                f"svm solve (n={svm_n}, nu={nu})",
                name,
                bench_smo(backend, K, nu, 1e-6, 200_000),
            )
        )

    results = {}
    for label, name, fn in cases:
        fn()  # warm caches before timing
        results[(label, name)] = median_time(fn, args.repeats)

    labels = sorted({label for label, _ in results})
    width = max(len(label) for label in labels) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{n:>12}" for n in names)
    if len(names) > 1:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label in labels:
        row = f"{label:<{width}}"
        times = [results[(label, name)] for name in names]
        for t in times:
            row += f"{t * 1e3:>10.1f}ms"
        if len(times) > 1:
            python_t = results[(label, "python")]
            compiled_t = results[(label, "compiled")]
            row += f"{python_t / compiled_t:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
