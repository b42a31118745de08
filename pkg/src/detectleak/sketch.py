"""Shingling, MinHash signatures, and Jaccard similarity.

Shingles are word n-grams (maximal ``\\w+`` runs, n=2 by default)
fingerprinted to 64 bits. Signatures hold, per permutation of a universal
hash family, the minimum over all shingle fingerprints; the fraction of
agreeing positions between two signatures estimates their Jaccard
similarity.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from ._kernels import EMPTY_SENTINEL, MERSENNE_31
from .errors import UsageError

DEFAULT_NGRAM = 2
DEFAULT_NUM_PERM = 256
DEFAULT_SEED = 42
MIN_NUM_PERM = 16

_TOKEN_RE = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    """Maximal runs of word characters (letters, digits, underscore)."""
    return _TOKEN_RE.findall(text)


def fingerprint64(shingle: str) -> int:
    """Stable 64-bit fingerprint of a shingle string."""
    digest = hashlib.blake2b(shingle.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class ShingleSet:
    """Unique shingle fingerprints of one document.

    ``hashes`` is a sorted uint64 array; |hashes| <= max(1, token_count - n + 1).
    """

    n: int
    hashes: np.ndarray
    token_count: int

    def __len__(self) -> int:
        return int(self.hashes.shape[0])


def shingle(text: str, n: int = DEFAULT_NGRAM, chars: bool = False) -> ShingleSet:
    """Fingerprint every n-token window; short non-empty inputs yield one
    shingle over the whole token sequence, empty inputs the empty set.
    With chars=True the units are characters instead of word tokens."""
    if n < 1:
        raise UsageError(f"n-gram size must be >= 1, got {n}")
    if chars:
        return _shingle_chars(text, n)
    tokens = tokenize(text)
    count = len(tokens)
    if count == 0:
        grams: list[str] = []
    elif count < n:
        grams = [" ".join(tokens)]
    else:
        grams = [" ".join(tokens[i:i + n]) for i in range(count - n + 1)]
    if grams:
        hashes = np.unique(np.fromiter((fingerprint64(g) for g in grams),
                                       dtype=np.uint64, count=len(grams)))
    else:
        hashes = np.empty(0, dtype=np.uint64)
    return ShingleSet(n=n, hashes=hashes, token_count=count)


def _shingle_chars(text: str, n: int) -> ShingleSet:
    count = len(text)
    if count == 0:
        grams: list[str] = []
    elif count < n:
        grams = [text]
    else:
        grams = [text[i:i + n] for i in range(count - n + 1)]
    if grams:
        hashes = np.unique(np.fromiter((fingerprint64(g) for g in grams),
                                       dtype=np.uint64, count=len(grams)))
    else:
        hashes = np.empty(0, dtype=np.uint64)
    return ShingleSet(n=n, hashes=hashes, token_count=count)


def shingle_set_from_hashes(values: Iterable[int], n: int = DEFAULT_NGRAM) -> ShingleSet:
    """Build a ShingleSet directly from fingerprints (synthetic suites)."""
    hashes = np.unique(np.fromiter(values, dtype=np.uint64))
    return ShingleSet(n=n, hashes=hashes, token_count=int(hashes.shape[0]) + n - 1)


@lru_cache(maxsize=32)
def permutation_params(num_perm: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (a, b) coefficient vectors for the hash family."""
    rng = np.random.default_rng([seed, 0xA])
    a = rng.integers(1, int(MERSENNE_31), num_perm, dtype=np.uint64)
    b = rng.integers(0, int(MERSENNE_31), num_perm, dtype=np.uint64)
    return a, b


@dataclass(frozen=True)
class MinHashSignature:
    """Per-permutation minima; empty sets get an all-sentinel signature that
    matches only other empty signatures."""

    num_perm: int
    seed: int
    mins: np.ndarray

    @property
    def is_empty(self) -> bool:
        return bool(self.mins[0] == EMPTY_SENTINEL)


def _check_num_perm(num_perm: int) -> None:
    if num_perm < MIN_NUM_PERM:
        raise UsageError(
            f"num_perm must be >= {MIN_NUM_PERM} (estimator variance "
            f"unacceptable below that), got {num_perm}")


def minhash(s: ShingleSet, num_perm: int = DEFAULT_NUM_PERM,
            seed: int = DEFAULT_SEED) -> MinHashSignature:
    _check_num_perm(num_perm)
    mins = minhash_batch([s.hashes], num_perm=num_perm, seed=seed)[0]
    return MinHashSignature(num_perm=num_perm, seed=seed, mins=mins)


def minhash_batch(hash_arrays: Sequence[np.ndarray],
                  num_perm: int = DEFAULT_NUM_PERM,
                  seed: int = DEFAULT_SEED) -> np.ndarray:
    """Signatures for many documents in one kernel call.

    Returns a (n_docs, num_perm) uint64 matrix; row i belongs to
    hash_arrays[i].
    """
    _check_num_perm(num_perm)
    a, b = permutation_params(num_perm, seed)
    offsets = np.zeros(len(hash_arrays) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([arr.shape[0] for arr in hash_arrays])
    if offsets[-1] > 0:
        flat = np.concatenate([arr for arr in hash_arrays if arr.shape[0]])
    else:
        flat = np.empty(0, dtype=np.uint64)
    return _kernels.minhash_mins(flat, offsets, a, b)


def exact_jaccard(a: ShingleSet, b: ShingleSet) -> float:
    """|a n b| / |a u b|; both-empty pairs are 1.0 by convention (degenerate,
    surfaced for review), one-empty pairs 0.0."""
    if a.n != b.n:
        raise UsageError(f"mismatched shingle sizes: {a.n} vs {b.n}")
    la, lb = len(a), len(b)
    if la == 0 and lb == 0:
        return 1.0
    if la == 0 or lb == 0:
        return 0.0
    inter = np.intersect1d(a.hashes, b.hashes, assume_unique=True).shape[0]
    return inter / (la + lb - inter)


def estimate_jaccard(a: MinHashSignature, b: MinHashSignature) -> float:
    """Fraction of agreeing minima."""
    if a.num_perm != b.num_perm or a.seed != b.seed:
        raise UsageError("signatures built with different num_perm/seed "
                         "cannot be compared")
    return float(np.mean(a.mins == b.mins))


def estimate_from_rows(row_a: np.ndarray, row_b: np.ndarray) -> float:
    return float(np.mean(row_a == row_b))


def save_signatures(path, ids: Sequence[str], mins: np.ndarray,
                    header: dict) -> None:
    """Versioned binary signature dump (npz with an embedded JSON header)."""
    import json
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        path,
        header_json=np.frombuffer(
            json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8),
        ids=np.asarray(list(ids), dtype=str),
        mins=mins.astype(np.uint64, copy=False),
    )


def load_signatures(path) -> tuple[dict, list[str], np.ndarray]:
    import json

    from .errors import DataError

    with np.load(path, allow_pickle=False) as payload:
        try:
            header = json.loads(bytes(payload["header_json"]).decode("utf-8"))
            ids = [str(x) for x in payload["ids"]]
            mins = payload["mins"].astype(np.uint64, copy=False)
        except KeyError as exc:
            raise DataError(f"{path} is not a signature dump: missing {exc}")
    return header, ids, mins
