"""Flat-file persistence for pipeline artifacts.

Everything is plain JSONL/JSON/CSV with deterministic serialization
(sorted keys, no timestamps injected here) so identical runs produce
byte-identical files. Writes are atomic: content goes to a temporary file
in the same directory, then replaces the target in one rename.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from pathlib import Path

from .errors import StorageError


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def save_text(text: str, path) -> None:
    _atomic_write(Path(path), text)


def save_jsonl(rows: list[dict], path) -> None:
    _atomic_write(
        Path(path), "".join(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n" for row in rows)
    )


def load_jsonl(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise StorageError(f"{path}: no such file")
    rows = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise StorageError(f"{path}:{lineno}: malformed JSONL line: {exc}") from exc
    return rows


def save_records(records: list, path) -> None:
    """Persist dataclass records that expose to_dict()."""
    save_jsonl([r.to_dict() for r in records], path)


def load_records(path, record_type) -> list:
    """Inverse of save_records for types exposing from_dict()."""
    records = []
    for lineno, row in enumerate(load_jsonl(path), start=1):
        try:
            records.append(record_type.from_dict(row))
        except (KeyError, TypeError, ValueError) as exc:
            raise StorageError(
                f"{path}:{lineno}: cannot rebuild {record_type.__name__}: {exc}"
            ) from exc
    return records


def save_json(obj, path) -> None:
    _atomic_write(Path(path), json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def load_json(path):
    path = Path(path)
    if not path.exists():
        raise StorageError(f"{path}: no such file")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise StorageError(f"{path}: malformed JSON: {exc}") from exc


def save_csv(rows: list[dict], path, fieldnames: list[str] | None = None) -> None:
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _atomic_write(Path(path), buffer.getvalue())


def load_csv(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise StorageError(f"{path}: no such file")
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def file_hash(path) -> str:
    path = Path(path)
    if not path.exists():
        raise StorageError(f"{path}: no such file")
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]
