"""Line-delimited JSON helpers and the headered artifact format.

Every artifact the pipeline emits (signature dumps aside, which are npz)
is a JSONL file whose first line is a header record carrying the format
name, a version, and the resolved run configuration. Data rows follow,
one JSON object per line.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import DataError

ARTIFACT_VERSION = 1


def read_jsonl(path: str | Path) -> Iterator[dict]:
    """Yield one parsed object per line; raises DataError on unreadable input."""
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            yield json.loads(line)


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> int:
    """Write rows as JSONL, creating parent directories. Returns row count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    return count


def make_header(fmt: str, config: dict | None = None, **extra: Any) -> dict:
    header = {"format": fmt, "version": ARTIFACT_VERSION}
    if config is not None:
        header["config"] = config
    header.update(extra)
    return header


def write_artifact(path: str | Path, header: dict, rows: Iterable[dict]) -> int:
    """Write a headered JSONL artifact; returns the number of data rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(header, ensure_ascii=False, sort_keys=True) + "\n")
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_artifact(path: str | Path) -> tuple[dict, list[dict]]:
    """Read a headered JSONL artifact into (header, rows)."""
    rows = list(read_jsonl(path))
    if not rows or "format" not in rows[0]:
        raise DataError(f"{path} is not a headered artifact (missing format header)")
    return rows[0], rows[1:]


def atomic_write_json(path: str | Path, payload: dict) -> None:
    """Write JSON via a temp file + rename so readers never see partial data."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    os.replace(tmp, path)


def read_json(path: str | Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
