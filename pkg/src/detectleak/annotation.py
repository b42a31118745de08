"""Human-verification workflow over flagged pairs.

Storage is an append-only event log (assignments, submissions,
adjudications) beside an immutable pairs file; the in-memory snapshot is
derived by replay. All mutations go through one writer lock, so a single
service process is safe; multi-process writers are out of contract.

Labels: each flagged pair is independently reviewed by (normally two)
annotators using a four-class scheme; the first two classes collapse to
non-duplicate, the last two to duplicate. Pairs whose first-round labels
differ are resolved by a third annotator. A benchmark document counts as
leaked when at least one of its pairs ends with a duplicate final label.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DataError, DuplicateSubmission, UsageError
from .jsonl import make_header, read_artifact, read_json, atomic_write_json

LABEL_NOT_RELATED = "not_related"
LABEL_RELATED_NOT_DUPLICATE = "related_not_duplicate"
LABEL_SEMANTICALLY_EQUIVALENT = "semantically_equivalent"
LABEL_EXACT_COPY = "exact_copy"
LABELS = (LABEL_NOT_RELATED, LABEL_RELATED_NOT_DUPLICATE,
          LABEL_SEMANTICALLY_EQUIVALENT, LABEL_EXACT_COPY)

BINARY_DUPLICATE = "duplicate"
BINARY_NON_DUPLICATE = "non_duplicate"

RESOLVED_AGREEMENT = "agreement"
RESOLVED_THIRD = "third_annotator"

PAIRS_FORMAT = "detectleak-annotation-pairs"
EVENTS_FILE = "events.jsonl"
PAIRS_FILE = "pairs.jsonl"
META_FILE = "meta.json"


def binary_collapse(label: str) -> str:
    if label not in LABELS:
        raise UsageError(f"unknown label {label!r}; expected one of {LABELS}")
    if label in (LABEL_SEMANTICALLY_EQUIVALENT, LABEL_EXACT_COPY):
        return BINARY_DUPLICATE
    return BINARY_NON_DUPLICATE


def cohen_kappa(label_pairs: Iterable[tuple[str, str]],
                binary: bool = False) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e) between two raters.

    p_e is the chance agreement implied by each rater's marginal label
    distribution. The degenerate all-one-class case (p_e == 1, p_o == 1)
    returns 1.0.
    """
    pairs = list(label_pairs)
    if not pairs:
        raise UsageError("kappa needs at least one labeled pair")
    if binary:
        pairs = [(binary_collapse(a), binary_collapse(b)) for a, b in pairs]
    n = len(pairs)
    p_o = sum(1 for a, b in pairs if a == b) / n
    classes = sorted({a for a, _ in pairs} | {b for _, b in pairs})
    p_e = 0.0
    for cls in classes:
        left = sum(1 for a, _ in pairs if a == cls) / n
        right = sum(1 for _, b in pairs if b == cls) / n
        p_e += left * right
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else -1.0
    return (p_o - p_e) / (1.0 - p_e)


def assign_pairs(pair_ids: Iterable[str], annotators: Iterable[str],
                 per_pair: int = 2, seed: int = 0) -> dict[str, list[str]]:
    """Deterministic balanced assignment: every pair gets per_pair distinct
    annotators; loads differ by at most one."""
    pool = sorted(set(annotators))
    ids = sorted(set(pair_ids))
    if per_pair < 1:
        raise UsageError("per_pair must be >= 1")
    if len(pool) < per_pair:
        raise UsageError(
            f"need at least {per_pair} annotators, got {len(pool)}")
    rng = np.random.default_rng([seed, 0xC])
    rng.shuffle(pool)
    rng.shuffle(ids)
    plan: dict[str, list[str]] = {}
    for k, pid in enumerate(ids):
        plan[pid] = [pool[(k * per_pair + j) % len(pool)]
                     for j in range(per_pair)]
    return plan


def leaked_samples(final_pairs: Iterable[tuple[str, str, str]]
                   ) -> dict[str, set[str]]:
    """(dataset, bench_doc, final_label) triples -> dataset -> leaked docs.

    A document appearing in several duplicate pairs is counted once.
    """
    leaked: dict[str, set[str]] = {}
    for dataset, bench_doc, final_label in final_pairs:
        if binary_collapse(final_label) == BINARY_DUPLICATE:
            leaked.setdefault(dataset, set()).add(bench_doc)
    return leaked


@dataclass(frozen=True)
class AnnotationRecord:
    pair_id: str
    annotator_id: str
    label: str
    ts: str

    def as_dict(self) -> dict:
        return {"pair_id": self.pair_id, "annotator": self.annotator_id,
                "label": self.label, "ts": self.ts}


@dataclass(frozen=True)
class AdjudicatedPair:
    pair_id: str
    final_label: str
    resolved_by: str
    adjudicator_id: str | None = None

    def as_dict(self) -> dict:
        return {"pair_id": self.pair_id, "final_label": self.final_label,
                "resolved_by": self.resolved_by,
                "adjudicator_id": self.adjudicator_id}


@dataclass
class PairState:
    pair_id: str
    bench_id: str
    corpus_id: str
    dataset: str
    repo_path: str | None
    est_j: float
    exact_j: float
    suggested: str | None
    bench_text: str
    corpus_text: str
    assigned: list[str] = field(default_factory=list)
    records: dict[str, AnnotationRecord] = field(default_factory=dict)
    adjudication: AdjudicatedPair | None = None

    @property
    def fully_labeled(self) -> bool:
        return bool(self.assigned) and all(
            a in self.records for a in self.assigned)

    @property
    def labels_agree(self) -> bool:
        labels = {r.label for r in self.records.values()}
        return self.fully_labeled and len(labels) == 1

    @property
    def in_conflict(self) -> bool:
        return (self.fully_labeled and not self.labels_agree
                and self.adjudication is None)

    @property
    def resolution(self) -> AdjudicatedPair | None:
        """Terminal state: explicit adjudication or derived agreement."""
        if self.adjudication is not None:
            return self.adjudication
        if self.labels_agree:
            label = next(iter(self.records.values())).label
            return AdjudicatedPair(pair_id=self.pair_id, final_label=label,
                                   resolved_by=RESOLVED_AGREEMENT)
        return None

    @property
    def status(self) -> str:
        if self.adjudication is not None:
            return "adjudicated"
        if self.fully_labeled:
            return "labeled"
        return "flagged"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class AnnotationStore:
    """Event-sourced store under one directory (pairs, events, meta)."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._lock = threading.RLock()
        self.pairs: dict[str, PairState] = {}
        self.meta: dict = {}
        self._event_order: list[dict] = []
        self._load()

    # -- construction -----------------------------------------------------

    @classmethod
    def initialize(cls, directory: str | Path, pair_rows: Iterable[dict],
                   meta: dict | None = None) -> "AnnotationStore":
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        pairs_path = directory / PAIRS_FILE
        if pairs_path.exists():
            raise UsageError(f"store already initialized at {directory}")
        import json

        header = make_header(PAIRS_FORMAT)
        with open(pairs_path, "w", encoding="utf-8") as handle:
            handle.write(json.dumps(header, sort_keys=True) + "\n")
            for row in pair_rows:
                handle.write(json.dumps(row, ensure_ascii=False) + "\n")
        (directory / EVENTS_FILE).touch()
        atomic_write_json(directory / META_FILE, meta or {})
        return cls(directory)

    def _load(self) -> None:
        pairs_path = self.directory / PAIRS_FILE
        if not pairs_path.exists():
            raise DataError(f"no annotation store at {self.directory}")
        header, rows = read_artifact(pairs_path)
        if header.get("format") != PAIRS_FORMAT:
            raise DataError(f"{pairs_path} is not an annotation pairs file")
        for row in rows:
            state = PairState(
                pair_id=row["pair_id"], bench_id=row["bench_id"],
                corpus_id=row["corpus_id"], dataset=row["dataset"],
                repo_path=row.get("repo_path"),
                est_j=float(row.get("est_j", -1.0)),
                exact_j=float(row.get("exact_j", -1.0)),
                suggested=row.get("suggested"),
                bench_text=row.get("bench_text", ""),
                corpus_text=row.get("corpus_text", ""))
            self.pairs[state.pair_id] = state
        meta_path = self.directory / META_FILE
        self.meta = read_json(meta_path) if meta_path.exists() else {}
        events_path = self.directory / EVENTS_FILE
        if events_path.exists():
            import json

            with open(events_path, "r", encoding="utf-8") as handle:
                for line in handle:
                    line = line.strip()
                    if line:
                        self._apply(json.loads(line), replay=True)

    def _append_event(self, event: dict) -> None:
        import json

        with open(self.directory / EVENTS_FILE, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, ensure_ascii=False) + "\n")
            handle.flush()

    def _apply(self, event: dict, replay: bool = False) -> None:
        kind = event.get("event")
        if kind == "assign":
            state = self._pair(event["pair_id"])
            state.assigned = list(event["annotators"])
        elif kind == "submit":
            state = self._pair(event["pair_id"])
            record = AnnotationRecord(
                pair_id=event["pair_id"], annotator_id=event["annotator"],
                label=event["label"], ts=event["ts"])
            state.records[record.annotator_id] = record
        elif kind == "adjudicate":
            state = self._pair(event["pair_id"])
            state.adjudication = AdjudicatedPair(
                pair_id=event["pair_id"], final_label=event["label"],
                resolved_by=RESOLVED_THIRD,
                adjudicator_id=event["adjudicator"])
        else:
            raise DataError(f"unknown event kind {kind!r} in log")
        self._event_order.append(event)

    def _pair(self, pair_id: str) -> PairState:
        try:
            return self.pairs[pair_id]
        except KeyError:
            raise UsageError(f"unknown pair_id {pair_id!r}") from None

    # -- mutations ---------------------------------------------------------

    def assign(self, annotators: Iterable[str], per_pair: int = 2,
               seed: int = 0) -> dict[str, list[str]]:
        with self._lock:
            if any(state.assigned for state in self.pairs.values()):
                raise UsageError("pairs are already assigned")
            plan = assign_pairs(self.pairs.keys(), annotators,
                                per_pair=per_pair, seed=seed)
            ts = _now()
            for pair_id, names in sorted(plan.items()):
                event = {"event": "assign", "pair_id": pair_id,
                         "annotators": names, "ts": ts}
                self._append_event(event)
                self._apply(event)
            return plan

    def submit(self, pair_id: str, annotator_id: str,
               label: str) -> AnnotationRecord:
        if label not in LABELS:
            raise UsageError(f"unknown label {label!r}; expected one of {LABELS}")
        with self._lock:
            state = self._pair(pair_id)
            if annotator_id not in state.assigned:
                raise UsageError(
                    f"annotator {annotator_id!r} is not assigned to {pair_id}")
            if annotator_id in state.records:
                raise DuplicateSubmission(
                    f"{annotator_id!r} already labeled {pair_id}",
                    existing=state.records[annotator_id])
            event = {"event": "submit", "pair_id": pair_id,
                     "annotator": annotator_id, "label": label, "ts": _now()}
            self._append_event(event)
            self._apply(event)
            return state.records[annotator_id]

    def adjudicate(self, pair_id: str, adjudicator_id: str,
                   label: str) -> AdjudicatedPair:
        if label not in LABELS:
            raise UsageError(f"unknown label {label!r}; expected one of {LABELS}")
        with self._lock:
            state = self._pair(pair_id)
            if not state.in_conflict:
                raise UsageError(f"pair {pair_id} is not awaiting adjudication")
            if adjudicator_id in state.assigned:
                raise UsageError(
                    "adjudicator must be distinct from the two first-round "
                    f"annotators of {pair_id}")
            event = {"event": "adjudicate", "pair_id": pair_id,
                     "adjudicator": adjudicator_id, "label": label,
                     "ts": _now()}
            self._append_event(event)
            self._apply(event)
            assert state.adjudication is not None
            return state.adjudication

    # -- queries -----------------------------------------------------------

    def conflicts(self) -> list[str]:
        """Fully-labeled pairs whose first-round labels differ, unresolved."""
        return sorted(pid for pid, state in self.pairs.items()
                      if state.in_conflict)

    def next_pair(self, annotator_id: str) -> PairState | None:
        pending = sorted(
            pid for pid, state in self.pairs.items()
            if annotator_id in state.assigned
            and annotator_id not in state.records)
        return self.pairs[pending[0]] if pending else None

    def first_round_label_pairs(self, dataset: str | None = None
                                ) -> list[tuple[str, str]]:
        """Per fully-labeled pair, the two labels ordered by annotator id."""
        out = []
        for state in self.pairs.values():
            if dataset is not None and state.dataset != dataset:
                continue
            if state.fully_labeled and len(state.assigned) == 2:
                first, second = sorted(state.assigned)
                out.append((state.records[first].label,
                            state.records[second].label))
        return out

    def kappa_by_duo(self, binary: bool = False) -> dict:
        """Pairwise kappa per annotator duo plus the unweighted mean."""
        duos: dict[tuple[str, str], list[tuple[str, str]]] = {}
        for state in self.pairs.values():
            if state.fully_labeled and len(state.assigned) == 2:
                first, second = sorted(state.assigned)
                duos.setdefault((first, second), []).append(
                    (state.records[first].label, state.records[second].label))
        scores = {duo: cohen_kappa(pairs, binary=binary)
                  for duo, pairs in sorted(duos.items())}
        mean = (sum(scores.values()) / len(scores)) if scores else None
        return {"duos": {f"{a}+{b}": v for (a, b), v in scores.items()},
                "mean": mean}

    def final_pairs(self) -> list[tuple[PairState, AdjudicatedPair]]:
        out = []
        for pid in sorted(self.pairs):
            state = self.pairs[pid]
            resolution = state.resolution
            if resolution is not None:
                out.append((state, resolution))
        return out

    def leaked_samples(self) -> dict[str, set[str]]:
        return leaked_samples(
            (state.dataset, state.bench_id, resolution.final_label)
            for state, resolution in self.final_pairs())

    def export_labels(self) -> list[dict]:
        """Submissions and adjudications in event order:
        {pair_id, annotator, label, ts} per line."""
        rows = []
        for event in self._event_order:
            if event["event"] == "submit":
                rows.append({"pair_id": event["pair_id"],
                             "annotator": event["annotator"],
                             "label": event["label"], "ts": event["ts"]})
            elif event["event"] == "adjudicate":
                rows.append({"pair_id": event["pair_id"],
                             "annotator": event["adjudicator"],
                             "label": event["label"], "ts": event["ts"]})
        return rows

    def progress(self) -> dict:
        per_annotator: dict[str, dict[str, int]] = {}
        for state in self.pairs.values():
            for name in state.assigned:
                entry = per_annotator.setdefault(
                    name, {"assigned": 0, "submitted": 0})
                entry["assigned"] += 1
                if name in state.records:
                    entry["submitted"] += 1
        resolved = [state.resolution for state in self.pairs.values()]
        agreement = sum(1 for r in resolved
                        if r and r.resolved_by == RESOLVED_AGREEMENT)
        adjudicated = sum(1 for r in resolved
                          if r and r.resolved_by == RESOLVED_THIRD)
        duplicates = sum(
            1 for r in resolved
            if r and binary_collapse(r.final_label) == BINARY_DUPLICATE)
        label_pairs = self.first_round_label_pairs()
        return {
            "pairs_total": len(self.pairs),
            "fully_labeled": sum(1 for s in self.pairs.values()
                                 if s.fully_labeled),
            "labels_submitted": sum(len(s.records)
                                    for s in self.pairs.values()),
            "conflicts_open": len(self.conflicts()),
            "resolved_agreement": agreement,
            "resolved_third_annotator": adjudicated,
            "duplicate_pairs": duplicates,
            "kappa_4class": cohen_kappa(label_pairs) if label_pairs else None,
            "kappa_binary": (cohen_kappa(label_pairs, binary=True)
                             if label_pairs else None),
            "per_annotator": dict(sorted(per_annotator.items())),
        }
