"""Banded locality-sensitive index over MinHash signatures.

Signatures are split into b contiguous bands of r rows; each band slice is
mixed into a salted 64-bit key and the document id appended to that band's
bucket. Two documents become a candidate pair when they share at least one
band key. The (b, r) split is planned by minimizing the weighted false
positive + false negative area of the S-curve 1-(1-J^r)^b around the
verification threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import DataError, UsageError
from .jsonl import atomic_write_json, read_json
from .sketch import MIN_NUM_PERM, MinHashSignature

INDEX_FORMAT = "detectleak-lsh-index"
INDEX_VERSION = 1


@dataclass(frozen=True)
class LshParams:
    num_perm: int
    bands: int
    rows: int
    threshold: float

    def __post_init__(self) -> None:
        if self.bands < 1 or self.rows < 1:
            raise UsageError("bands and rows must be >= 1")
        if self.bands * self.rows > self.num_perm:
            raise UsageError(
                f"bands*rows = {self.bands * self.rows} exceeds "
                f"num_perm = {self.num_perm}")
        if not 0.0 < self.threshold < 1.0:
            raise UsageError("threshold must be in (0, 1)")

    @property
    def midpoint(self) -> float:
        """Similarity at which candidacy probability crosses ~0.5."""
        return (1.0 / self.bands) ** (1.0 / self.rows)

    def as_dict(self) -> dict:
        return {"num_perm": self.num_perm, "bands": self.bands,
                "rows": self.rows, "threshold": self.threshold}

    @classmethod
    def from_dict(cls, payload: dict) -> "LshParams":
        return cls(num_perm=int(payload["num_perm"]), bands=int(payload["bands"]),
                   rows=int(payload["rows"]), threshold=float(payload["threshold"]))


def candidate_probability(j: float, bands: int, rows: int) -> float:
    return 1.0 - (1.0 - j ** rows) ** bands


def _scurve_error(bands: int, rows: int, threshold: float,
                  fp_weight: float, fn_weight: float, steps: int = 500) -> float:
    # Midpoint-rule areas under the S-curve left of the threshold (false
    # positives) and above it to the right (false negatives).
    fp = 0.0
    width = threshold / steps
    for i in range(steps):
        s = (i + 0.5) * width
        fp += candidate_probability(s, bands, rows) * width
    fn = 0.0
    width = (1.0 - threshold) / steps
    for i in range(steps):
        s = threshold + (i + 0.5) * width
        fn += (1.0 - candidate_probability(s, bands, rows)) * width
    return fp_weight * fp + fn_weight * fn


@lru_cache(maxsize=64)
def plan_bands(num_perm: int, threshold: float,
               fp_weight: float = 0.5, fn_weight: float = 0.5) -> LshParams:
    """Pick (b, r) with b*r <= num_perm minimizing the weighted S-curve error;
    deterministic (first minimum in (b asc, r asc) order wins)."""
    if num_perm < MIN_NUM_PERM:
        raise UsageError(f"num_perm must be >= {MIN_NUM_PERM}")
    if not 0.0 < threshold < 1.0:
        raise UsageError("threshold must be in (0, 1)")
    best: tuple[float, int, int] | None = None
    for bands in range(1, num_perm + 1):
        for rows in range(1, num_perm // bands + 1):
            err = _scurve_error(bands, rows, threshold, fp_weight, fn_weight)
            if best is None or err < best[0]:
                best = (err, bands, rows)
    assert best is not None
    return LshParams(num_perm=num_perm, bands=best[1], rows=best[2],
                     threshold=threshold)


def band_salts(seed: int, bands: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 0xB])
    return rng.integers(0, 1 << 63, bands, dtype=np.uint64)


class LshIndex:
    """Append-only during build, immutable afterward."""

    def __init__(self, params: LshParams, seed: int) -> None:
        self.params = params
        self.seed = seed
        self.salts = band_salts(seed, params.bands)
        self.buckets: list[dict[int, list[str]]] = [
            {} for _ in range(params.bands)]
        self.doc_count = 0
        self._frozen = False

    def insert_batch(self, ids: Sequence[str], mins: np.ndarray) -> None:
        if self._frozen:
            raise UsageError("index is finalized; no online insertion")
        if mins.ndim != 2 or mins.shape[1] != self.params.num_perm:
            raise DataError(
                f"signature width {mins.shape} does not match index "
                f"num_perm={self.params.num_perm}")
        if len(ids) != mins.shape[0]:
            raise DataError("ids/mins length mismatch")
        keys = _kernels.band_keys(mins, self.params.bands, self.params.rows,
                                  self.salts)
        for band in range(self.params.bands):
            bucket = self.buckets[band]
            col = keys[:, band]
            for row, doc_id in enumerate(ids):
                bucket.setdefault(int(col[row]), []).append(doc_id)
        self.doc_count += len(ids)

    def finalize(self) -> "LshIndex":
        self._frozen = True
        return self

    def _query_keys(self, mins: np.ndarray) -> np.ndarray:
        return _kernels.band_keys(mins.reshape(1, -1), self.params.bands,
                                  self.params.rows, self.salts)[0]

    def query(self, sig: MinHashSignature | np.ndarray,
              exclude: str | None = None) -> set[str]:
        """Union of bucket members over all bands for the query's band keys."""
        if isinstance(sig, MinHashSignature):
            if sig.num_perm != self.params.num_perm or sig.seed != self.seed:
                raise UsageError("query signature parameters do not match index")
            mins = sig.mins
        else:
            mins = np.asarray(sig, dtype=np.uint64)
            if mins.shape[0] != self.params.num_perm:
                raise UsageError("query signature parameters do not match index")
        keys = self._query_keys(mins)
        found: set[str] = set()
        for band in range(self.params.bands):
            members = self.buckets[band].get(int(keys[band]))
            if members:
                found.update(members)
        if exclude is not None:
            found.discard(exclude)
        return found

    def bucket_membership_total(self) -> int:
        return sum(len(members) for band in self.buckets
                   for members in band.values())

    # persistence: header file + one bucket file per band (optionally sharded)

    def save(self, directory: str | Path, shard_count: int = 1) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        shard_count = max(1, int(shard_count))
        header = {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "params": self.params.as_dict(),
            "seed": self.seed,
            "doc_count": self.doc_count,
            "shard_count": shard_count,
        }
        atomic_write_json(directory / "header.json", header)
        for band in range(self.params.bands):
            shards: list[dict[str, list[str]]] = [
                {} for _ in range(shard_count)]
            for key, members in self.buckets[band].items():
                shards[key % shard_count][str(key)] = members
            for shard_idx, shard in enumerate(shards):
                name = (f"band_{band:03d}.json" if shard_count == 1
                        else f"band_{band:03d}_shard_{shard_idx:02d}.json")
                with open(directory / name, "w", encoding="utf-8") as handle:
                    json.dump(shard, handle, sort_keys=True)

    @classmethod
    def load(cls, directory: str | Path) -> "LshIndex":
        directory = Path(directory)
        header = read_json(directory / "header.json")
        if header.get("format") != INDEX_FORMAT:
            raise DataError(f"{directory} is not an LSH index directory")
        index = cls(LshParams.from_dict(header["params"]), int(header["seed"]))
        index.doc_count = int(header["doc_count"])
        shard_count = int(header.get("shard_count", 1))
        for band in range(index.params.bands):
            if shard_count == 1:
                names = [f"band_{band:03d}.json"]
            else:
                names = [f"band_{band:03d}_shard_{s:02d}.json"
                         for s in range(shard_count)]
            bucket: dict[int, list[str]] = {}
            for name in names:
                with open(directory / name, "r", encoding="utf-8") as handle:
                    for key, members in json.load(handle).items():
                        bucket[int(key)] = list(members)
            index.buckets[band] = bucket
        return index.finalize()


def build_index(signatures: Iterable[tuple[str, np.ndarray]] | Iterator,
                params: LshParams, seed: int,
                batch_size: int = 4096) -> LshIndex:
    """Build from a stream of (doc_id, mins row); wrong widths are fatal."""
    index = LshIndex(params, seed)
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for doc_id, mins in signatures:
        mins = np.asarray(mins, dtype=np.uint64)
        if mins.shape != (params.num_perm,):
            raise DataError(
                f"signature for {doc_id!r} has width {mins.shape}, "
                f"index expects {params.num_perm}")
        ids.append(doc_id)
        rows.append(mins)
        if len(ids) >= batch_size:
            index.insert_batch(ids, np.vstack(rows))
            ids, rows = [], []
    if ids:
        index.insert_batch(ids, np.vstack(rows))
    return index.finalize()
