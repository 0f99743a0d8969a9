#!/usr/bin/env python3
"""Benchmark the numba kernels against the NumPy fallback path.

Times the three hot kernels (forward-delta extraction, decayed weight
sums over a sweep, community local moves) on realistic workloads, plus a
full decay-rate sweep on a synthetic campaign dataset under the active
path. Run with COACTNET_NO_NUMBA=1 to make the end-to-end sweep use the
fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from coactnet._accel import NUMBA_ENABLED, get_impl
from coactnet.ingest import build_combined_index
from coactnet.layers import DeltaTable, beta_grid, tune_beta
from coactnet.synth import simulate


def timeit(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_directed_deltas(impl, rng, repeat):
    tu = np.sort(rng.uniform(0, 1e6, size=2000))
    tv = np.sort(rng.uniform(0, 1e6, size=2000))
    fn = impl["directed_deltas"]
    fn(tu, tv)  # warm-up / compile

    def run():
        for _ in range(200):
            fn(tu, tv)

    return timeit(run, repeat)


def bench_decayed_sums(impl, rng, repeat):
    n_pairs = 2000
    counts = rng.integers(1, 40, size=n_pairs)
    offsets = np.zeros(n_pairs + 1, np.int64)
    offsets[1:] = np.cumsum(counts)
    deltas = np.concatenate([np.sort(rng.uniform(0, 5000, size=c)) for c in counts])
    coefs = rng.uniform(0.01, 1.0, size=int(offsets[-1]))
    fn = impl["decayed_sums"]
    fn(deltas, coefs, offsets, 0.5, 100.0)

    def run():
        for beta in np.linspace(0.0, 10.0, 101):
            fn(deltas, coefs, offsets, float(beta), 1000.0)

    return timeit(run, repeat)


def bench_local_move(impl, rng, repeat):
    n = 300
    density = 0.05
    mask = np.triu(rng.random((n, n)) < density, k=1)
    eu, ev = np.nonzero(mask)
    w = rng.uniform(0.1, 1.0, size=eu.size)
    src = np.concatenate([eu, ev]).astype(np.int64)
    dst = np.concatenate([ev, eu]).astype(np.int64)
    ww = np.concatenate([w, w])
    order_csr = np.lexsort((dst, src))
    src, dst, ww = src[order_csr], dst[order_csr], ww[order_csr]
    indptr = np.zeros(n + 1, np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    strength = np.zeros(n)
    np.add.at(strength, src, ww)
    kappa = (strength / np.sqrt(ww.sum()))[:, None]
    order = rng.permutation(n).astype(np.int64)
    fn = impl["local_move"]

    def run():
        labels = np.arange(n, dtype=np.int64)
        comm_kappa = kappa.copy()
        comm_size = np.ones(n, np.int64)
        fn(indptr, dst, ww, kappa, labels, comm_kappa, comm_size, order,
           np.zeros(n, np.int64), 1.0, 256)

    run()
    return timeit(run, repeat)


def bench_sweep(repeat):
    dataset, _ = simulate(1, seed=1)
    index = build_combined_index(dataset)
    universe = tuple(sorted(dataset.users))
    grid = beta_grid(0, 10, 0.01)
    table = DeltaTable.from_index(index, universe)  # warm any compilation

    def run():
        tune_beta(index, grid, seed=0, universe=universe, time_unit_s=60.0)

    run()
    return timeit(run, repeat), table.n_pairs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    rng = np.random.default_rng(7)

    impls = [("numpy", get_impl("numpy"))]
    try:
        impls.insert(0, ("numba", get_impl("numba")))
    except RuntimeError:
        print("numba unavailable; benchmarking the fallback only")

    rows = []
    for bench in (bench_directed_deltas, bench_decayed_sums, bench_local_move):
        name = bench.__name__.removeprefix("bench_")
        times = {label: bench(impl, rng, args.repeat) for label, impl in impls}
        rows.append((name, times))

    width = max(len(name) for name, _ in rows)
    header = f"{'kernel':<{width}}  " + "".join(f"{label:>12}" for label, _ in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, times in rows:
        line = f"{name:<{width}}  " + "".join(
            f"{times[label] * 1e3:>10.2f}ms" for label, _ in impls)
        if len(impls) == 2:
            line += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(line)

    sweep_time, n_pairs = bench_sweep(args.repeat)
    path = "numba" if NUMBA_ENABLED else "numpy fallback"
    print(f"\nfull 1001-point decay sweep on a 46-user dataset "
          f"({n_pairs} co-acting pairs) using the {path} path: "
          f"{sweep_time:.2f}s")


if __name__ == "__main__":
    main()
