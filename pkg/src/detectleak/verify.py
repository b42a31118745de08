"""Exact-Jaccard confirmation of LSH candidates.

A candidate pair survives when the exact Jaccard of the two shingle sets
clears the threshold; surviving pairs are flagged as potential duplicates
for human review. Candidates whose shingle data is missing are quarantined
rather than aborting the scan.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .errors import DataError
from .lsh import LshIndex
from .sketch import ShingleSet, estimate_from_rows, exact_jaccard

log = logging.getLogger("detectleak.verify")

STATUS_CANDIDATE = "candidate"
STATUS_FLAGGED = "flagged"
STATUS_LABELED = "labeled"
STATUS_ADJUDICATED = "adjudicated"

EXACT_COPY_HINT = "exact_copy_hint"


def make_pair_id(bench_key: str, corpus_key: str) -> str:
    """Stable id derived from the two qualified doc ids."""
    digest = hashlib.blake2b(
        f"{bench_key}\x1f{corpus_key}".encode("utf-8"), digest_size=16)
    return digest.hexdigest()


@dataclass(frozen=True)
class CandidatePair:
    pair_id: str
    bench_id: str
    corpus_id: str
    est_jaccard: float
    exact_jaccard: float = -1.0
    status: str = STATUS_CANDIDATE
    suggested: str | None = None

    def as_record(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "bench_id": self.bench_id,
            "corpus_id": self.corpus_id,
            "est_j": round(self.est_jaccard, 6),
            "exact_j": round(self.exact_jaccard, 6),
            "suggested": self.suggested,
        }


@dataclass
class ScanStats:
    benchmark: str
    bench_docs: int = 0
    corpus_size: int = 0
    candidates: int = 0
    unique_candidates: int = 0
    flagged: int = 0
    dropped: int = 0
    quarantined: int = 0

    @property
    def comparisons_avoided(self) -> int:
        return self.bench_docs * self.corpus_size - self.unique_candidates

    def as_dict(self) -> dict:
        payload = {k: getattr(self, k) for k in (
            "benchmark", "bench_docs", "corpus_size", "candidates",
            "unique_candidates", "flagged", "dropped", "quarantined")}
        payload["comparisons_avoided"] = self.comparisons_avoided
        return payload


ShingleLookup = Callable[[str], ShingleSet | None]
TextLookup = Callable[[str], str | None]


def verify(candidates: Iterable[CandidatePair], shingles: ShingleLookup,
           threshold: float, texts: TextLookup | None = None,
           stats: ScanStats | None = None
           ) -> tuple[list[CandidatePair], list[CandidatePair]]:
    """Compute exact Jaccard per candidate; keep those >= threshold.

    Returns (flagged, quarantined). Quarantined pairs had no shingle data;
    the pipeline continues.
    """
    flagged: list[CandidatePair] = []
    quarantined: list[CandidatePair] = []
    for cand in candidates:
        bench_set = shingles(cand.bench_id)
        corpus_set = shingles(cand.corpus_id)
        if bench_set is None or corpus_set is None:
            log.warning("quarantined pair=%s (missing shingle data)",
                        cand.pair_id)
            quarantined.append(cand)
            if stats:
                stats.quarantined += 1
            continue
        exact = exact_jaccard(bench_set, corpus_set)
        if exact >= threshold:
            suggested = None
            if texts is not None:
                left = texts(cand.bench_id)
                right = texts(cand.corpus_id)
                if left is not None and left == right:
                    suggested = EXACT_COPY_HINT
            flagged.append(replace(cand, exact_jaccard=exact,
                                   status=STATUS_FLAGGED, suggested=suggested))
            if stats:
                stats.flagged += 1
        else:
            if stats:
                stats.dropped += 1
    return flagged, quarantined


SignatureLookup = Callable[[str], "np.ndarray | None"]


def scan(benchmark: str, bench_ids: list[str], bench_mins: np.ndarray,
         index: LshIndex, shingles: ShingleLookup, threshold: float,
         texts: TextLookup | None = None,
         corpus_mins: SignatureLookup | None = None
         ) -> tuple[list[CandidatePair], ScanStats, list[CandidatePair]]:
    """Query the index for every benchmark document, deduplicate candidate
    pairs, and verify them. Flagged output is sorted by pair_id."""
    stats = ScanStats(benchmark=benchmark, bench_docs=len(bench_ids),
                      corpus_size=index.doc_count)
    if not bench_ids:
        log.warning("benchmark %s is empty; nothing to scan", benchmark)
        return [], stats, []
    if bench_mins.shape[0] != len(bench_ids):
        raise DataError("benchmark ids/signature count mismatch")

    seen: set[str] = set()
    candidates: list[CandidatePair] = []
    for row, bench_id in enumerate(bench_ids):
        matches = index.query(bench_mins[row], exclude=bench_id)
        stats.candidates += len(matches)
        for corpus_id in sorted(matches):
            pid = make_pair_id(bench_id, corpus_id)
            if pid in seen:
                continue
            seen.add(pid)
            est = -1.0
            if corpus_mins is not None:
                corpus_row = corpus_mins(corpus_id)
                if corpus_row is not None:
                    est = estimate_from_rows(bench_mins[row], corpus_row)
            candidates.append(CandidatePair(
                pair_id=pid, bench_id=bench_id, corpus_id=corpus_id,
                est_jaccard=est))
    stats.unique_candidates = len(candidates)
    flagged, quarantined = verify(candidates, shingles, threshold,
                                  texts=texts, stats=stats)
    flagged.sort(key=lambda pair: pair.pair_id)
    return flagged, stats, quarantined
