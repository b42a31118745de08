"""Rank-based leak detection from precomputed perplexity scores.

Perplexity itself is computed elsewhere; this module consumes a score
file, ranks samples ascending (low perplexity = high model confidence),
classifies the top-k as leaked, and reports accuracy curves plus
distribution summaries. Ties break by sample id so results are
reproducible across runs and platforms.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, UsageError

log = logging.getLogger("detectleak.ppl")

GOLD_LEAKED = "leaked"
GOLD_NON_LEAKED = "non_leaked"
GOLDS = (GOLD_LEAKED, GOLD_NON_LEAKED)

DEFAULT_KS = tuple(range(100, 1001, 100))
DEFAULT_TRIM_PCT = 0.02


@dataclass(frozen=True)
class PerplexityRecord:
    sample_id: str
    gold: str
    perplexity: float


def load_scores(path: str | Path) -> tuple[list[PerplexityRecord], int]:
    """Parse a score file; returns (records, rejected_count).

    Rows with a non-finite or non-positive perplexity, a bad gold value,
    or missing fields are rejected and counted. Duplicate sample ids are
    fatal.
    """
    records: list[PerplexityRecord] = []
    rejected = 0
    seen: set[str] = set()
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                rejected += 1
                continue
            sample_id = row.get("id") if isinstance(row, dict) else None
            gold = row.get("gold") if isinstance(row, dict) else None
            ppl = row.get("ppl") if isinstance(row, dict) else None
            if (not isinstance(sample_id, str) or gold not in GOLDS
                    or not isinstance(ppl, (int, float))
                    or not math.isfinite(ppl) or ppl <= 0):
                rejected += 1
                log.warning("rejected score row %s:%d", path, lineno)
                continue
            if sample_id in seen:
                raise DataError(f"duplicate sample_id {sample_id!r} "
                                f"at {path}:{lineno}")
            seen.add(sample_id)
            records.append(PerplexityRecord(sample_id, gold, float(ppl)))
    return records, rejected


def rank_ascending(records: Iterable[PerplexityRecord]
                   ) -> list[PerplexityRecord]:
    """Stable ascending sort by perplexity; ties break by sample_id."""
    ranked = sorted(records, key=lambda r: (r.perplexity, r.sample_id))
    if not ranked:
        raise UsageError("need at least one perplexity record")
    return ranked


def topk_accuracy(records: Sequence[PerplexityRecord], k: int) -> float:
    """Proportion of truly leaked samples among the k lowest perplexities."""
    ranked = rank_ascending(records)
    if not 1 <= k <= len(ranked):
        raise UsageError(f"k must be in [1, {len(ranked)}], got {k}")
    leaked = sum(1 for r in ranked[:k] if r.gold == GOLD_LEAKED)
    return leaked / k


def accuracy_curve(records: Sequence[PerplexityRecord],
                   ks: Sequence[int] | None = None) -> list[tuple[int, float]]:
    """topk_accuracy at each k; defaults to 100..1000 step 100 clipped to
    the record count."""
    n = len(records)
    if ks is None:
        ks = [k for k in DEFAULT_KS if k <= n] or [n]
    return [(int(k), topk_accuracy(records, int(k))) for k in ks]


def trim_outliers(records: Sequence[PerplexityRecord],
                  top_pct: float = DEFAULT_TRIM_PCT
                  ) -> list[PerplexityRecord]:
    """Drop the ceil(top_pct * n) highest-perplexity records from each gold
    class independently. Presentation aid only; never applied to accuracy."""
    if not 0.0 <= top_pct < 1.0:
        raise UsageError(f"top_pct must be in [0, 1), got {top_pct}")
    if top_pct == 0.0:
        return list(records)
    kept: list[PerplexityRecord] = []
    for gold in GOLDS:
        members = [r for r in records if r.gold == gold]
        cut = math.ceil(top_pct * len(members))
        members.sort(key=lambda r: (r.perplexity, r.sample_id))
        kept.extend(members[:len(members) - cut] if cut else members)
    kept.sort(key=lambda r: (r.perplexity, r.sample_id))
    return kept


def distribution_export(records: Sequence[PerplexityRecord], bins: int,
                        trim_pct: float = DEFAULT_TRIM_PCT) -> dict:
    """Equal-width per-class histograms over the trimmed perplexity range,
    emitted as plot-ready data."""
    if bins < 1:
        raise UsageError(f"bins must be >= 1, got {bins}")
    trimmed = trim_outliers(records, trim_pct)
    if not trimmed:
        raise UsageError("no records left to bin")
    values = np.array([r.perplexity for r in trimmed])
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    classes = {}
    for gold in GOLDS:
        class_values = [r.perplexity for r in trimmed if r.gold == gold]
        counts, _ = np.histogram(class_values, bins=edges)
        classes[gold] = counts.tolist()
    return {
        "bin_edges": edges.tolist(),
        "classes": classes,
        "trim_pct": trim_pct,
        "total": len(trimmed),
    }
