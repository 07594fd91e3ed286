"""Benchmark: compiled kernels vs the pure-numpy fallback.

Times the raw kernels and an end-to-end training run on each available
backend and prints a small table. Both backends produce bit-identical
output (asserted here too), so the only difference is speed.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from prunekit import backend
from prunekit.data_io import FeatureSet
from prunekit.nn import TrainConfig, init_model, train


def timeit(fn, min_seconds=0.3):
    fn()  # warmup
    n, elapsed = 0, 0.0
    start = time.perf_counter()
    while elapsed < min_seconds:
        fn()
        n += 1
        elapsed = time.perf_counter() - start
    return elapsed / n


def bench_kernels(impls):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((512, 64)).astype(np.float32)
    b = rng.standard_normal((64, 128)).astype(np.float32)
    x = rng.standard_normal((2000, 16))
    c = rng.standard_normal((50, 16))
    labels = rng.integers(0, 50, 2000).astype(np.int64)

    cases = {
        "matmul_nn 512x64x128": lambda impl: impl.matmul_nn(a, b),
        "matmul_tn 64x512x128": lambda impl: impl.matmul_tn(
            np.ascontiguousarray(a.T), np.ascontiguousarray(rng.standard_normal((512, 128)).astype(np.float32))
        ),
        "sqdist 2000x50 d16": lambda impl: impl.sqdist(x, c),
        "cluster_sums 2000 k50": lambda impl: impl.cluster_sums(x, labels, 50),
    }
    rows = []
    for name, fn in cases.items():
        times = {bname: timeit(lambda impl=impl: fn(impl)) for bname, impl in impls.items()}
        rows.append((name, times))
    return rows


def bench_training():
    rng = np.random.default_rng(1)
    feats = rng.standard_normal((2000, 16)).astype(np.float32)
    labels = rng.integers(0, 10, 2000).astype(np.uint32)
    data = FeatureSet(feats, labels)
    cfg = TrainConfig(3, 64, 0.02, momentum=0.9, weight_decay=5e-4, seed=0)

    def run():
        train(init_model([16, 16, 3, 10], seed=0), data, cfg)

    return timeit(run, min_seconds=1.0)


def check_parity(impls):
    if len(impls) < 2:
        return "n/a (single backend)"
    rng = np.random.default_rng(7)
    a = rng.standard_normal((37, 23)).astype(np.float32)
    b = rng.standard_normal((23, 19)).astype(np.float32)
    outs = [impl.matmul_nn(a, b) for impl in impls.values()]
    return "bit-identical" if np.array_equal(outs[0], outs[1]) else "MISMATCH"


def main():
    impls = backend.backends()
    print(f"active backend: {backend.BACKEND}; available: {', '.join(sorted(impls))}")
    print(f"kernel output parity: {check_parity(impls)}\n")

    rows = bench_kernels(impls)
    names = sorted(impls)
    header = f"{'kernel':<26}" + "".join(f"{n:>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, times in rows:
        line = f"{name:<26}" + "".join(f"{times[n] * 1e6:>12.1f}us" for n in names)
        if len(names) == 2:
            line += f"{times['numpy'] / times['compiled']:>9.1f}x"
        print(line)

    print()
    import importlib
    import os

    results = {}
    for bname in names:
        # reload repopulates the module object in place, so every importer
        # picks up the forced backend
        os.environ["PRUNEKIT_BACKEND"] = bname
        importlib.reload(backend)
        results[bname] = bench_training()
    os.environ.pop("PRUNEKIT_BACKEND", None)
    importlib.reload(backend)
    line = f"{'train 2000x16 3 epochs':<26}" + "".join(f"{results[n] * 1e3:>12.1f}ms" for n in names)
    if len(names) == 2:
        line += f"{results['numpy'] / results['compiled']:>9.1f}x"
    print(line)


if __name__ == "__main__":
    main()
