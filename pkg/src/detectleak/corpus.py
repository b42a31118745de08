"""Data model and ingestion for pre-training corpora and benchmark datasets.

Input files are line-delimited records: ``{"id": str, "text": str,
"repo": str|null, "meta": object|null}``. A dataset manifest (also JSONL)
names each file: ``{"dataset": str, "origin": "corpus"|"benchmark",
"path": str, "text_field": str}``.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .errors import DataError, UsageError

log = logging.getLogger("detectleak.corpus")

ORIGIN_CORPUS = "corpus"
ORIGIN_BENCHMARK = "benchmark"
ORIGINS = (ORIGIN_CORPUS, ORIGIN_BENCHMARK)

_BLOCK_COMMENT_RE = re.compile(r"/\*.*?\*/", re.DOTALL)
# Line comments are removed up to (not including) the newline so stripping
# never glues adjacent lines into one token.
_LINE_COMMENT_RE = re.compile(r"(?://|#)[^\n]*")


@dataclass(frozen=True)
class NormalizationPolicy:
    """Text cleanup applied at ingest; applying it twice equals applying it once."""

    lowercase: bool = False
    collapse_whitespace: bool = True
    strip_line_comments: bool = False
    strip_block_comments: bool = False

    def as_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "collapse_whitespace": self.collapse_whitespace,
            "strip_line_comments": self.strip_line_comments,
            "strip_block_comments": self.strip_block_comments,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NormalizationPolicy":
        return cls(**{k: bool(payload[k]) for k in cls().as_dict() if k in payload})


def normalize(text: str, policy: NormalizationPolicy) -> str:
    """Apply the policy; deterministic, idempotent, total."""
    if policy.strip_block_comments:
        text = _BLOCK_COMMENT_RE.sub(" ", text)
    if policy.strip_line_comments:
        text = _LINE_COMMENT_RE.sub("", text)
    if policy.lowercase:
        text = text.lower()
    if policy.collapse_whitespace:
        text = " ".join(text.split())
    return text


@dataclass(frozen=True)
class Document:
    """One corpus or benchmark sample after normalization."""

    doc_id: str
    origin: str
    dataset: str
    text: str
    repo_path: str | None = None
    byte_len: int = 0

    @property
    def key(self) -> str:
        """Dataset-qualified id, unique across every ingested file."""
        return f"{self.dataset}::{self.doc_id}"

    @classmethod
    def create(cls, doc_id: str, origin: str, dataset: str, text: str,
               repo_path: str | None = None) -> "Document":
        if not doc_id:
            raise DataError("document id must be non-empty")
        if origin not in ORIGINS:
            raise UsageError(f"origin must be one of {ORIGINS}, got {origin!r}")
        return cls(doc_id=doc_id, origin=origin, dataset=dataset, text=text,
                   repo_path=repo_path, byte_len=len(text.encode("utf-8")))


@dataclass
class IngestStats:
    """Per-file line accounting: accepted + rejected_empty + rejected_malformed
    equals the input line count."""

    accepted: int = 0
    rejected_empty: int = 0
    rejected_malformed: int = 0

    @property
    def total_lines(self) -> int:
        return self.accepted + self.rejected_empty + self.rejected_malformed

    @property
    def n_total(self) -> int:
        """Ratio denominator: empty-after-normalize docs still count."""
        return self.accepted + self.rejected_empty

    def as_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected_empty": self.rejected_empty,
            "rejected_malformed": self.rejected_malformed,
            "n_total": self.n_total,
        }


def ingest(path: str | Path, origin: str, dataset: str,
           policy: NormalizationPolicy, *, text_field: str = "text",
           stats: IngestStats | None = None) -> Iterator[Document]:
    """Stream Documents from a record file, normalizing text per policy.

    Malformed lines are skipped, counted, and logged with their line number.
    A duplicate doc_id within the same (origin, dataset) is fatal: it signals
    corrupt input. Pass a stats object to collect counts during iteration.
    """
    if stats is None:
        stats = IngestStats()
    if origin not in ORIGINS:
        raise UsageError(f"origin must be one of {ORIGINS}, got {origin!r}")
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    seen: set[str] = set()
    with handle:
        for lineno, line in enumerate(handle, start=1):
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                stats.rejected_malformed += 1
                log.warning("malformed line skipped file=%s line=%d", path, lineno)
                continue
            if not isinstance(record, dict):
                stats.rejected_malformed += 1
                log.warning("non-object line skipped file=%s line=%d", path, lineno)
                continue
            doc_id = record.get("id")
            text = record.get(text_field)
            if not isinstance(doc_id, str) or not doc_id or not isinstance(text, str):
                stats.rejected_malformed += 1
                log.warning("bad record skipped file=%s line=%d", path, lineno)
                continue
            if doc_id in seen:
                raise DataError(
                    f"duplicate doc_id {doc_id!r} in ({origin}, {dataset}) "
                    f"at {path}:{lineno}")
            seen.add(doc_id)
            normalized = normalize(text, policy)
            if not normalized:
                stats.rejected_empty += 1
                continue
            repo = record.get("repo")
            stats.accepted += 1
            yield Document.create(doc_id, origin, dataset, normalized,
                                  repo_path=repo if isinstance(repo, str) else None)


@dataclass(frozen=True)
class ManifestEntry:
    dataset: str
    origin: str
    path: str
    text_field: str = "text"

    def resolved_path(self, base: Path) -> Path:
        p = Path(self.path)
        return p if p.is_absolute() else base / p


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Parse a JSONL dataset manifest; paths stay relative to the manifest."""
    path = Path(path)
    entries: list[ManifestEntry] = []
    seen: set[tuple[str, str]] = set()
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"manifest {path}:{lineno}: invalid JSON") from exc
        for key in ("dataset", "origin", "path"):
            if key not in record:
                raise DataError(f"manifest {path}:{lineno}: missing {key!r}")
        if record["origin"] not in ORIGINS:
            raise DataError(
                f"manifest {path}:{lineno}: origin must be one of {ORIGINS}")
        ident = (record["origin"], record["dataset"])
        if ident in seen:
            raise DataError(f"manifest {path}:{lineno}: duplicate dataset {ident}")
        seen.add(ident)
        entries.append(ManifestEntry(
            dataset=record["dataset"], origin=record["origin"],
            path=record["path"], text_field=record.get("text_field", "text")))
    if not entries:
        raise DataError(f"manifest {path} lists no datasets")
    return entries
