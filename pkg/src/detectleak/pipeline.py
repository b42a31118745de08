"""Run configuration and the staged ingest -> sketch -> index -> scan ->
store-init pipeline with per-stage completion markers.

A finished stage drops a ``markers/<stage>.done`` file recording elapsed
time and counts; re-running a completed directory skips straight past it,
so interrupted runs resume where they stopped. Every emitted artifact
embeds the resolved configuration in its header. The flagged-pairs files
contain no timestamps: identical config + seed reproduces them
byte-for-byte.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .corpus import (IngestStats, ManifestEntry, NormalizationPolicy,
                     ORIGIN_BENCHMARK, ORIGIN_CORPUS, ingest, load_manifest)
from .errors import DataError, UsageError
from .jsonl import (atomic_write_json, make_header, read_artifact,
                    read_json, write_artifact)
from .lsh import LshIndex, plan_bands
from .sketch import load_signatures, minhash_batch, save_signatures, shingle

log = logging.getLogger("detectleak.pipeline")

STAGES = ("ingest", "sketch", "index", "scan", "store_init")

DOCS_FORMAT = "detectleak-docs"
SIGS_FORMAT = "detectleak-signatures"
FLAGGED_FORMAT = "detectleak-flagged-pairs"


@dataclass(frozen=True)
class RunConfig:
    """Resolved pipeline parameters; defaults follow the detection recipe
    (word 2-grams, Jaccard threshold 0.7, 256 permutations)."""

    ngram_n: int = 2
    char_ngrams: bool = False
    threshold: float = 0.7
    num_perm: int = 256
    seed: int = 42
    shard_count: int = 1
    jobs: int = 1
    data_dir: str = "."
    lowercase: bool = False
    collapse_whitespace: bool = True
    strip_line_comments: bool = False
    strip_block_comments: bool = False

    def policy(self) -> NormalizationPolicy:
        return NormalizationPolicy(
            lowercase=self.lowercase,
            collapse_whitespace=self.collapse_whitespace,
            strip_line_comments=self.strip_line_comments,
            strip_block_comments=self.strip_block_comments)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def stamp(self) -> dict:
        """Config fields that determine artifact contents. Environment
        fields (data_dir, jobs, shard_count) stay out so identical
        config+seed reproduces artifacts byte-for-byte anywhere."""
        skip = {"data_dir", "jobs", "shard_count"}
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name not in skip}

    @classmethod
    def resolve(cls, config_file: str | None = None,
                overrides: dict | None = None) -> "RunConfig":
        """Merge defaults <- config file <- explicit overrides <- env."""
        payload: dict = {}
        if config_file:
            loaded = read_json(config_file)
            known = {f.name for f in fields(cls)}
            unknown = set(loaded) - known
            if unknown:
                raise UsageError(f"unknown config keys: {sorted(unknown)}")
            payload.update(loaded)
        for key, value in (overrides or {}).items():
            if value is not None:
                payload[key] = value
        if "data_dir" not in payload and os.environ.get("DETECTLEAK_DATA_DIR"):
            payload["data_dir"] = os.environ["DETECTLEAK_DATA_DIR"]
        return cls(**payload)


@dataclass
class RunPaths:
    root: Path

    @property
    def markers(self) -> Path:
        return self.root / "markers"

    def marker(self, stage: str) -> Path:
        return self.markers / f"{stage}.done"

    def docs(self, origin: str, dataset: str) -> Path:
        return self.root / "docs" / f"{origin}_{dataset}.jsonl"

    def stats(self, origin: str, dataset: str) -> Path:
        return self.root / "stats" / f"{origin}_{dataset}.json"

    def sigs(self, origin: str, dataset: str) -> Path:
        return self.root / "sigs" / f"{origin}_{dataset}.npz"

    @property
    def index_dir(self) -> Path:
        return self.root / "index"

    def flagged(self, dataset: str) -> Path:
        return self.root / "pairs" / f"flagged_{dataset}.jsonl"

    def quarantine(self, dataset: str) -> Path:
        return self.root / "pairs" / f"quarantine_{dataset}.jsonl"

    def scan_stats(self, dataset: str) -> Path:
        return self.root / "pairs" / f"scanstats_{dataset}.json"

    @property
    def store_dir(self) -> Path:
        return self.root / "store"

    @property
    def run_manifest(self) -> Path:
        return self.root / "run_manifest.json"

    @property
    def config_file(self) -> Path:
        return self.root / "run_config.json"


def _stage_done(paths: RunPaths, stage: str) -> bool:
    return paths.marker(stage).exists()


def _write_marker(paths: RunPaths, stage: str, elapsed: float,
                  counts: dict) -> None:
    atomic_write_json(paths.marker(stage), {
        "stage": stage, "elapsed_s": round(elapsed, 3), "counts": counts,
        "completed_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    })


def load_docs_artifact(path: Path) -> tuple[dict, list[dict]]:
    header, rows = read_artifact(path)
    if header.get("format") != DOCS_FORMAT:
        raise DataError(f"{path} is not a docs artifact")
    return header, rows


def stage_ingest(config: RunConfig, entries: list[ManifestEntry],
                 manifest_base: Path, paths: RunPaths) -> dict:
    policy = config.policy()

    def _one(entry: ManifestEntry) -> tuple[str, dict]:
        stats = IngestStats()
        docs = list(ingest(entry.resolved_path(manifest_base), entry.origin,
                           entry.dataset, policy,
                           text_field=entry.text_field, stats=stats))
        header = make_header(DOCS_FORMAT, config=config.stamp(),
                             dataset=entry.dataset, origin=entry.origin)
        write_artifact(paths.docs(entry.origin, entry.dataset), header,
                       ({"id": d.doc_id, "text": d.text, "repo": d.repo_path}
                        for d in docs))
        payload = dict(stats.as_dict())
        payload["dataset"] = entry.dataset
        payload["origin"] = entry.origin
        payload["source_path"] = str(entry.resolved_path(manifest_base))
        payload["text_field"] = entry.text_field
        atomic_write_json(paths.stats(entry.origin, entry.dataset), payload)
        log.info("ingest dataset=%s origin=%s accepted=%d empty=%d malformed=%d",
                 entry.dataset, entry.origin, stats.accepted,
                 stats.rejected_empty, stats.rejected_malformed)
        return entry.dataset, payload

    counts: dict = {}
    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            for dataset, payload in pool.map(_one, entries):
                counts[f"{payload['origin']}:{dataset}"] = payload["accepted"]
    else:
        for entry in entries:
            dataset, payload = _one(entry)
            counts[f"{payload['origin']}:{dataset}"] = payload["accepted"]
    return counts


def stage_sketch(config: RunConfig, entries: list[ManifestEntry],
                 paths: RunPaths) -> dict:
    counts: dict = {}
    for entry in entries:
        _, rows = load_docs_artifact(paths.docs(entry.origin, entry.dataset))
        ids = [f"{entry.dataset}::{row['id']}" for row in rows]
        hash_arrays = [
            shingle(row["text"], config.ngram_n, chars=config.char_ngrams).hashes
            for row in rows]
        mins = minhash_batch(hash_arrays, num_perm=config.num_perm,
                             seed=config.seed)
        header = make_header(SIGS_FORMAT, config=config.stamp(),
                             dataset=entry.dataset, origin=entry.origin)
        save_signatures(paths.sigs(entry.origin, entry.dataset), ids, mins,
                        header)
        counts[f"{entry.origin}:{entry.dataset}"] = len(ids)
        log.info("sketch dataset=%s origin=%s docs=%d", entry.dataset,
                 entry.origin, len(ids))
    return counts


def stage_index(config: RunConfig, entries: list[ManifestEntry],
                paths: RunPaths) -> dict:
    params = plan_bands(config.num_perm, config.threshold)
    index = LshIndex(params, config.seed)
    total = 0
    for entry in entries:
        if entry.origin != ORIGIN_CORPUS:
            continue
        header, ids, mins = load_signatures(paths.sigs(entry.origin,
                                                       entry.dataset))
        if header["config"]["num_perm"] != config.num_perm:
            raise DataError(
                f"signature dump {entry.dataset} was built with "
                f"num_perm={header['config']['num_perm']}, expected "
                f"{config.num_perm}")
        index.insert_batch(ids, mins)
        total += len(ids)
    index.finalize()
    index.save(paths.index_dir, shard_count=config.shard_count)
    log.info("index built docs=%d bands=%d rows=%d", total, params.bands,
             params.rows)
    return {"docs": total, "bands": params.bands, "rows": params.rows}


class _DocLookup:
    """Lazy text + shingle access over loaded docs artifacts."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.texts: dict[str, str] = {}
        self._shingles: dict[str, object] = {}

    def add_docs(self, dataset: str, rows: list[dict]) -> None:
        for row in rows:
            self.texts[f"{dataset}::{row['id']}"] = row["text"]

    def text(self, key: str) -> str | None:
        return self.texts.get(key)

    def shingles(self, key: str):
        if key not in self.texts:
            return None
        if key not in self._shingles:
            self._shingles[key] = shingle(self.texts[key],
                                          self.config.ngram_n,
                                          chars=self.config.char_ngrams)
        return self._shingles[key]


def stage_scan(config: RunConfig, entries: list[ManifestEntry],
               paths: RunPaths, index: LshIndex | None = None) -> dict:
    if index is None:
        index = LshIndex.load(paths.index_dir)
    lookup = _DocLookup(config)
    for entry in entries:
        _, rows = load_docs_artifact(paths.docs(entry.origin, entry.dataset))
        lookup.add_docs(entry.dataset, rows)

    corpus_rows: dict[str, np.ndarray] = {}
    for entry in entries:
        if entry.origin != ORIGIN_CORPUS:
            continue
        _, ids, mins = load_signatures(paths.sigs(entry.origin, entry.dataset))
        for row, key in enumerate(ids):
            corpus_rows[key] = mins[row]

    counts: dict = {}
    for entry in entries:
        if entry.origin != ORIGIN_BENCHMARK:
            continue
        _, bench_ids, bench_mins = load_signatures(
            paths.sigs(entry.origin, entry.dataset))
        flagged, stats, quarantined = verify_mod.scan(
            entry.dataset, bench_ids, bench_mins, index,
            shingles=lookup.shingles, threshold=config.threshold,
            texts=lookup.text, corpus_mins=corpus_rows.get)
        header = make_header(
            FLAGGED_FORMAT, config=config.stamp(), benchmark=entry.dataset,
            lsh_params=index.params.as_dict())
        write_artifact(paths.flagged(entry.dataset), header,
                       (pair.as_record() for pair in flagged))
        if quarantined:
            write_artifact(paths.quarantine(entry.dataset),
                           make_header("detectleak-quarantine",
                                       config=config.stamp()),
                           (pair.as_record() for pair in quarantined))
        atomic_write_json(paths.scan_stats(entry.dataset), stats.as_dict())
        counts[entry.dataset] = stats.flagged
        log.info("scan benchmark=%s candidates=%d flagged=%d avoided=%d",
                 entry.dataset, stats.unique_candidates, stats.flagged,
                 stats.comparisons_avoided)
    return counts


def stage_store_init(config: RunConfig, entries: list[ManifestEntry],
                     paths: RunPaths) -> dict:
    from .annotation import AnnotationStore

    lookup = _DocLookup(config)
    repos: dict[str, str | None] = {}
    for entry in entries:
        _, rows = load_docs_artifact(paths.docs(entry.origin, entry.dataset))
        lookup.add_docs(entry.dataset, rows)
        for row in rows:
            repos[f"{entry.dataset}::{row['id']}"] = row.get("repo")

    pair_rows = []
    benchmarks_meta: dict[str, dict] = {}
    for entry in entries:
        if entry.origin != ORIGIN_BENCHMARK:
            continue
        stats = read_json(paths.stats(entry.origin, entry.dataset))
        benchmarks_meta[entry.dataset] = {
            "n_total": stats["n_total"],
            "source_path": stats["source_path"],
            "text_field": stats.get("text_field", "text"),
            "doc_file": str(paths.docs(entry.origin, entry.dataset)),
        }
        _, flagged_rows = read_artifact(paths.flagged(entry.dataset))
        for row in flagged_rows:
            pair_rows.append({
                "pair_id": row["pair_id"],
                "bench_id": row["bench_id"],
                "corpus_id": row["corpus_id"],
                "dataset": entry.dataset,
                "repo_path": repos.get(row["corpus_id"]),
                "est_j": row["est_j"],
                "exact_j": row["exact_j"],
                "suggested": row.get("suggested"),
                "bench_text": lookup.text(row["bench_id"]) or "",
                "corpus_text": lookup.text(row["corpus_id"]) or "",
            })
    pair_rows.sort(key=lambda r: r["pair_id"])
    meta = {"config": config.as_dict(), "benchmarks": benchmarks_meta,
            "run_dir": str(paths.root), "comparison_unit": "whole_record"}
    AnnotationStore.initialize(paths.store_dir, pair_rows, meta)
    log.info("store initialized pairs=%d", len(pair_rows))
    return {"pairs": len(pair_rows)}


def run_pipeline(config: RunConfig, manifest_path: str | Path,
                 run_dir: str | Path | None = None) -> dict:
    """Execute all stages in order, skipping those already marked done."""
    manifest_path = Path(manifest_path)
    entries = load_manifest(manifest_path)
    if not any(e.origin == ORIGIN_CORPUS for e in entries):
        raise UsageError("manifest needs at least one corpus dataset")
    if not any(e.origin == ORIGIN_BENCHMARK for e in entries):
        raise UsageError("manifest needs at least one benchmark dataset")
    paths = RunPaths(Path(run_dir) if run_dir else Path(config.data_dir))
    paths.root.mkdir(parents=True, exist_ok=True)
    paths.markers.mkdir(parents=True, exist_ok=True)
    atomic_write_json(paths.config_file, config.as_dict())

    summary: dict = {"run_dir": str(paths.root), "stages": {}}
    stage_fns = {
        "ingest": lambda: stage_ingest(config, entries,
                                       manifest_path.parent, paths),
        "sketch": lambda: stage_sketch(config, entries, paths),
        "index": lambda: stage_index(config, entries, paths),
        "scan": lambda: stage_scan(config, entries, paths),
        "store_init": lambda: stage_store_init(config, entries, paths),
    }
    for stage in STAGES:
        if _stage_done(paths, stage):
            log.info("stage=%s already complete; skipping", stage)
            summary["stages"][stage] = {"skipped": True}
            continue
        started = time.time()
        counts = stage_fns[stage]()
        elapsed = time.time() - started
        _write_marker(paths, stage, elapsed, counts)
        summary["stages"][stage] = {"elapsed_s": round(elapsed, 3),
                                    "counts": counts}
        log.info("stage=%s done elapsed=%.2fs", stage, elapsed)
    atomic_write_json(paths.run_manifest, summary)
    return summary
