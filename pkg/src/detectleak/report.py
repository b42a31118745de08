"""Leakage quantification, repository aggregation, cleaned benchmark
emission, and the balanced leak-detection evaluation set.

Ratios are exact fractions; the one-decimal half-up percent string is
presentation only and matches how the result tables are formatted
(zero leaks print as "0%").
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, UsageError

log = logging.getLogger("detectleak.report")

UNKNOWN_REPO = "unknown"
_SQUASH_RE = re.compile(r"[^0-9a-z]+")


def format_percent(count: int, total: int) -> str:
    """Half-up to one decimal; a clean zero stays "0%"."""
    if count == 0:
        return "0%"
    value = (Decimal(count) * 100 / Decimal(total)).quantize(
        Decimal("0.1"), rounding=ROUND_HALF_UP)
    return f"{value}%"


def leakage_metrics(dataset: str, n_total: int,
                    leaked: Iterable[str]) -> tuple[int, Fraction, str]:
    """(count, exact ratio, formatted percent) for one benchmark."""
    if n_total < 1:
        raise DataError(f"{dataset}: leakage ratio undefined for n_total=0")
    leaked_set = set(leaked)
    count = len(leaked_set)
    if count > n_total:
        raise DataError(
            f"{dataset}: leaked count {count} exceeds n_total {n_total}")
    return count, Fraction(count, n_total), format_percent(count, n_total)


def repo_aggregation(pair_repos: Iterable[str | None]) -> list[tuple[str, int]]:
    """Count duplicate pairs per source repository, descending, ties broken
    lexicographically. Null repos land in the "unknown" bucket."""
    counts = Counter(repo if repo else UNKNOWN_REPO for repo in pair_repos)
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


def _squash(path: str) -> str:
    return _SQUASH_RE.sub("", path.lower())


def keyword_scan(repo_paths: Iterable[str],
                 keywords: Sequence[str]) -> dict[str, list[str]]:
    """Case-insensitive substring scan over repository paths.

    A keyword also matches when it appears after separators are removed,
    so hyphenated spellings ("Leet-Code") count for "leetcode".
    """
    if not keywords:
        raise UsageError("keyword_scan needs at least one keyword")
    paths = sorted(set(repo_paths))
    matches: dict[str, list[str]] = {}
    for keyword in keywords:
        needle = keyword.lower()
        squashed_needle = _squash(needle)
        hits = [p for p in paths
                if needle in p.lower()
                or (squashed_needle and squashed_needle in _squash(p))]
        matches[keyword] = hits
    return matches


def emit_clean(benchmark_path: str | Path, leaked_ids: Iterable[str],
               justification: Mapping[str, Sequence[str]],
               out_path: str | Path, manifest_path: str | Path,
               manifest_header: dict | None = None) -> dict:
    """Copy the benchmark file minus leaked records; write a removal manifest.

    Raw lines pass through untouched, so a run with nothing leaked emits a
    byte-identical copy. Every leaked id must occur in the file.
    """
    benchmark_path = Path(benchmark_path)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    remaining = set(leaked_ids)
    removed: list[dict] = []
    kept = 0
    try:
        source = open(benchmark_path, "rb")
    except OSError as exc:
        raise DataError(f"cannot read {benchmark_path}: {exc}") from exc
    with source, open(out_path, "wb") as sink:
        for raw in source:
            doc_id = None
            try:
                record = json.loads(raw.decode("utf-8"))
                if isinstance(record, dict):
                    doc_id = record.get("id")
            except (json.JSONDecodeError, UnicodeDecodeError):
                pass
            if doc_id is not None and doc_id in remaining:
                remaining.discard(doc_id)
                removed.append({
                    "id": doc_id,
                    "pair_ids": sorted(justification.get(doc_id, []))})
            else:
                sink.write(raw)
                kept += 1
    if remaining:
        raise DataError(
            f"leaked ids not present in {benchmark_path}: {sorted(remaining)}")
    from .jsonl import make_header, write_artifact

    header = manifest_header or make_header("detectleak-removal-manifest")
    write_artifact(manifest_path, header, removed)
    return {"kept": kept, "removed": len(removed)}


def build_autodetect(samples: Iterable[tuple[str, str, str]],
                     seed: int = 0) -> dict:
    """Balanced leaked/non-leaked evaluation set.

    Input triples are (sample_id, normalized_text, gold) with gold in
    {"leaked", "non_leaked"}. Samples are deduplicated by text equality
    (first occurrence wins), the majority class is randomly under-sampled
    to the minority count, and the result is shuffled; all deterministic
    under the seed.
    """
    seen_texts: set[str] = set()
    by_class: dict[str, list[dict]] = {"leaked": [], "non_leaked": []}
    for sample_id, text, gold in samples:
        if gold not in by_class:
            raise UsageError(f"gold must be leaked|non_leaked, got {gold!r}")
        if text in seen_texts:
            continue
        seen_texts.add(text)
        by_class[gold].append({"id": sample_id, "text": text, "gold": gold})
    counts = {gold: len(rows) for gold, rows in by_class.items()}
    if min(counts.values()) == 0:
        raise DataError(
            f"cannot balance classes, post-dedup counts: {counts}")
    target = min(counts.values())
    rng = np.random.default_rng([seed, 0xD])
    selected: list[dict] = []
    for gold in ("leaked", "non_leaked"):
        rows = by_class[gold]
        if len(rows) > target:
            keep = rng.choice(len(rows), size=target, replace=False)
            rows = [rows[i] for i in sorted(keep)]
        selected.extend(rows)
    order = rng.permutation(len(selected))
    shuffled = [selected[i] for i in order]
    return {
        "samples": shuffled,
        "class_counts": {gold: target for gold in ("leaked", "non_leaked")},
        "pre_balance_counts": counts,
        "seed": seed,
    }


@dataclass
class BenchmarkRow:
    dataset: str
    n_total: int
    n_auto: int
    n_manual: int
    leaked_count: int
    leaked_ratio: float
    leaked_percent: str

    def as_dict(self) -> dict:
        return {
            "dataset": self.dataset, "n_total": self.n_total,
            "n_auto": self.n_auto, "n_manual": self.n_manual,
            "leaked_count": self.leaked_count,
            "leaked_ratio": self.leaked_ratio,
            "leaked_percent": self.leaked_percent,
        }


def build_report(store, run_metadata: dict | None = None) -> dict:
    """Assemble per-benchmark and per-repository leakage tables from a
    finalized annotation store snapshot."""
    benchmarks: dict[str, dict] = {}
    n_totals: Mapping[str, Mapping] = store.meta.get("benchmarks", {})
    for state in store.pairs.values():
        entry = benchmarks.setdefault(
            state.dataset, {"n_auto": 0, "n_manual": 0})
        entry["n_auto"] += 1
    duplicate_repos: list[str | None] = []
    manual_by_dataset: Counter = Counter()
    for state, resolution in store.final_pairs():
        from .annotation import BINARY_DUPLICATE, binary_collapse

        if binary_collapse(resolution.final_label) == BINARY_DUPLICATE:
            manual_by_dataset[state.dataset] += 1
            duplicate_repos.append(state.repo_path)
    leaked = store.leaked_samples()

    rows = []
    datasets = sorted(set(benchmarks) | set(n_totals))
    for dataset in datasets:
        info = n_totals.get(dataset, {})
        n_total = int(info.get("n_total", 0))
        if n_total < 1:
            log.warning("no n_total recorded for %s; skipping ratio", dataset)
            continue
        count, ratio, percent = leakage_metrics(
            dataset, n_total, leaked.get(dataset, set()))
        rows.append(BenchmarkRow(
            dataset=dataset, n_total=n_total,
            n_auto=benchmarks.get(dataset, {}).get("n_auto", 0),
            n_manual=manual_by_dataset.get(dataset, 0),
            leaked_count=count, leaked_ratio=float(ratio),
            leaked_percent=percent))
    report = {
        "format": "detectleak-report",
        "version": 1,
        "run": dict(run_metadata or {}),
        "benchmarks": [row.as_dict() for row in rows],
        "repositories": [
            {"repo_path": repo, "duplicate_pair_count": count}
            for repo, count in repo_aggregation(duplicate_repos)],
    }
    # Scan compares whole records, never sub-file chunks; consumers should
    # treat ratios accordingly.
    report["run"].setdefault("comparison_unit", "whole_record")
    return report


def render_markdown(report: dict) -> str:
    lines = ["# Leakage report", ""]
    run = report.get("run", {})
    if run:
        lines.append("Run: " + ", ".join(
            f"{k}={v}" for k, v in sorted(run.items())))
        lines.append("")
    lines.append("| Benchmark | Size | #Auto | #Manual | Leaked Count | Leaked Ratio |")
    lines.append("|---|---:|---:|---:|---:|---:|")
    for row in report.get("benchmarks", []):
        lines.append(
            f"| {row['dataset']} | {row['n_total']} | {row['n_auto']} | "
            f"{row['n_manual']} | {row['leaked_count']} | "
            f"{row['leaked_percent']} |")
    repos = report.get("repositories", [])
    if repos:
        lines += ["", "| Repository | Duplicate pairs |", "|---|---:|"]
        for entry in repos:
            lines.append(f"| {entry['repo_path']} | "
                         f"{entry['duplicate_pair_count']} |")
    return "\n".join(lines) + "\n"
