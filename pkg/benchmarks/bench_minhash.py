"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the two hot paths (batched MinHash minima, LSH band keys) on the
same synthetic workload with both backends, asserts they produce
identical output, and prints a timing table. The warmup pass absorbs JIT
compilation so the numba timing reflects steady state.

    python benchmarks/bench_minhash.py --docs 20000 --shingles 200
"""

import argparse
import time

import numpy as np

from detectleak._kernels import get_backend
from detectleak.sketch import permutation_params


def make_workload(docs, shingles_per_doc, seed=0):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(max(1, shingles_per_doc // 2),
                         shingles_per_doc * 2, docs)
    offsets = np.zeros(docs + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(sizes)
    flat = rng.integers(0, 1 << 63, int(offsets[-1]), dtype=np.uint64)
    return flat, offsets


def run(backend_name, flat, offsets, a, b, bands, rows, salts, repeats):
    minhash_mins, band_keys = get_backend(backend_name)
    minhash_mins(flat[:64], np.array([0, 64], dtype=np.int64), a, b)  # warmup
    timings = {}
    best = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        mins = minhash_mins(flat, offsets, a, b)
        elapsed = time.perf_counter() - t0
        best = min(best, elapsed) if best else elapsed
    timings["minhash"] = best
    band_keys(mins[:16], bands, rows, salts)  # warmup
    best = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        keys = band_keys(mins, bands, rows, salts)
        elapsed = time.perf_counter() - t0
        best = min(best, elapsed) if best else elapsed
    timings["band_keys"] = best
    return timings, mins, keys


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=20_000)
    parser.add_argument("--shingles", type=int, default=200)
    parser.add_argument("--num-perm", type=int, default=256)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    flat, offsets = make_workload(args.docs, args.shingles, args.seed)
    a, b = permutation_params(args.num_perm, args.seed)
    bands, rows = 25, 10
    salts = np.random.default_rng(args.seed).integers(
        0, 1 << 63, bands, dtype=np.uint64)

    print(f"workload: {args.docs} docs, {offsets[-1]} shingles total, "
          f"{args.num_perm} permutations")
    results = {}
    outputs = {}
    for backend in ("numpy", "numba"):
        try:
            timings, mins, keys = run(backend, flat, offsets, a, b,
                                      bands, rows, salts, args.repeats)
        except ImportError:
            print(f"{backend:>6}: unavailable")
            continue
        results[backend] = timings
        outputs[backend] = (mins, keys)

    if len(outputs) == 2:
        same_mins = np.array_equal(outputs["numpy"][0], outputs["numba"][0])
        same_keys = np.array_equal(outputs["numpy"][1], outputs["numba"][1])
        assert same_mins and same_keys, "backends disagree"
        print("outputs: identical across backends")

    header = f"{'kernel':>10} | " + " | ".join(f"{b:>10}" for b in results)
    print(header)
    print("-" * len(header))
    for kernel in ("minhash", "band_keys"):
        row = f"{kernel:>10} | " + " | ".join(
            f"{results[b][kernel] * 1000:8.1f}ms" for b in results)
        if len(results) == 2:
            speedup = results["numpy"][kernel] / results["numba"][kernel]
            row += f"   ({speedup:.1f}x)"
        print(row)


if __name__ == "__main__":
    main()
