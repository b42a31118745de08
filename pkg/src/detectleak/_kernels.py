"""Hot numeric kernels: batched MinHash minima and LSH band keys.

Two interchangeable backends produce bit-identical results:

* ``numba`` (default): ``@njit`` kernels, parallel over documents.
* ``numpy``: chunked vectorized fallback, no compilation step.

Selection is via the ``DETECTLEAK_BACKEND`` environment variable
("numba" or "numpy", read at import time). If numba is unavailable the
numpy path is used automatically. ``benchmarks/bench_minhash.py``
compares both.

The universal hash family is h_i(x) = (a_i * (x mod p) + b_i) mod p with
p = 2^31 - 1, so every product fits in uint64 for both backends. Minima
are therefore < 2^31; the all-ones uint64 is reserved as the sentinel row
for empty shingle sets.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

MERSENNE_31 = np.uint64((1 << 31) - 1)
EMPTY_SENTINEL = np.uint64(0xFFFFFFFFFFFFFFFF)

_MIX_MUL = np.uint64(0x9E3779B97F4A7C15)
_FINAL_MUL = np.uint64(0xBF58476D1CE4E5B9)
_S32 = np.uint64(32)
_S29 = np.uint64(29)


def _minhash_mins_numpy(flat: np.ndarray, offsets: np.ndarray,
                        a: np.ndarray, b: np.ndarray,
                        chunk: int = 4096) -> np.ndarray:
    """Per-document minima of the permuted shingle hashes (numpy path)."""
    n_docs = offsets.shape[0] - 1
    num_perm = a.shape[0]
    out = np.full((n_docs, num_perm), EMPTY_SENTINEL, dtype=np.uint64)
    folded = flat % MERSENNE_31
    a_row = a[None, :]
    b_row = b[None, :]
    for d in range(n_docs):
        lo = int(offsets[d])
        hi = int(offsets[d + 1])
        if hi == lo:
            continue
        best = np.full(num_perm, EMPTY_SENTINEL, dtype=np.uint64)
        for c in range(lo, hi, chunk):
            x = folded[c:min(c + chunk, hi), None]
            vals = (x * a_row + b_row) % MERSENNE_31
            np.minimum(best, vals.min(axis=0), out=best)
        out[d] = best
    return out


def _band_keys_numpy(mins: np.ndarray, n_bands: int, n_rows: int,
                     salts: np.ndarray) -> np.ndarray:
    """64-bit bucket key per (document, band): salted mix of the row slice."""
    n_docs = mins.shape[0]
    out = np.empty((n_docs, n_bands), dtype=np.uint64)
    for band in range(n_bands):
        h = np.full(n_docs, salts[band], dtype=np.uint64)
        base = band * n_rows
        for j in range(base, base + n_rows):
            h = (h ^ mins[:, j]) * _MIX_MUL
            h ^= h >> _S32
        h = h * _FINAL_MUL
        h ^= h >> _S29
        out[:, band] = h
    return out


def _build_numba():
    from numba import njit, prange

    p31 = MERSENNE_31
    sentinel = EMPTY_SENTINEL
    mix_mul = _MIX_MUL
    final_mul = _FINAL_MUL

    @njit(cache=True, parallel=True)
    def minhash_mins(flat, offsets, a, b):  # pragma: no cover - jitted
        n_docs = offsets.shape[0] - 1
        num_perm = a.shape[0]
        out = np.empty((n_docs, num_perm), dtype=np.uint64)
        for d in prange(n_docs):
            for i in range(num_perm):
                out[d, i] = sentinel
            for j in range(offsets[d], offsets[d + 1]):
                x = flat[j] % p31
                for i in range(num_perm):
                    v = (a[i] * x + b[i]) % p31
                    if v < out[d, i]:
                        out[d, i] = v
        return out

    @njit(cache=True, parallel=True)
    def band_keys(mins, n_bands, n_rows, salts):  # pragma: no cover - jitted
        n_docs = mins.shape[0]
        out = np.empty((n_docs, n_bands), dtype=np.uint64)
        for d in prange(n_docs):
            for band in range(n_bands):
                h = salts[band]
                base = band * n_rows
                for j in range(base, base + n_rows):
                    h = (h ^ mins[d, j]) * mix_mul
                    h ^= h >> np.uint64(32)
                h = h * final_mul
                h ^= h >> np.uint64(29)
                out[d, band] = h
        return out

    return minhash_mins, band_keys


def get_backend(name: str) -> tuple:
    """Return (minhash_mins, band_keys) for an explicit backend name."""
    if name == "numpy":
        return _minhash_mins_numpy, _band_keys_numpy
    if name == "numba":
        return _build_numba()
    raise ValueError(f"unknown backend {name!r} (expected 'numba' or 'numpy')")


def _select() -> tuple[str, tuple]:
    requested = os.environ.get("DETECTLEAK_BACKEND", "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        warnings.warn(f"DETECTLEAK_BACKEND={requested!r} not recognized; "
                      "using numba", stacklevel=2)
        requested = "numba"
    if requested == "numba":
        try:
            # An outdated bundled TBB makes numba warn once and fall back to
            # another threading layer; that warning is pure noise here.
            warnings.filterwarnings("ignore", message=".*TBB.*")
            return "numba", get_backend("numba")
        except ImportError:
            warnings.warn("numba unavailable; falling back to numpy kernels",
                          stacklevel=2)
    return "numpy", get_backend("numpy")


ACTIVE_BACKEND, (minhash_mins, band_keys) = _select()
