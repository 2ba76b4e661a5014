"""VQA records, manifests, training sets, feature matrices and distributions.

Matrix binary format ("TPIM"), all little-endian::

    offset  size        field
    0       4           magic  b"TPIM"
    4       4           rows   u32
    8       4           cols   u32
    12      4*rows*cols data   float32, row-major

Distributions are JSON arrays of nonnegative numbers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

TPIM_MAGIC = b"TPIM"
_HEADER = struct.Struct("<4sII")
DIST_TOLERANCE = 1e-6

_CORE_KEYS = ("id", "question", "answer", "description", "image", "provenance")


@dataclass
class VqaRecord:
    id: str
    question: str
    answer: str
    description: str = ""
    image_path: str | None = None
    provenance: str = "seed"
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        row = {"id": self.id, "question": self.question, "answer": self.answer,
               "description": self.description}
        if self.image_path is not None:
            row["image"] = self.image_path
        row["provenance"] = self.provenance
        for k, v in self.extra.items():
            row.setdefault(k, v)
        return row

    @classmethod
    def from_json(cls, row: dict) -> "VqaRecord":
        for key in ("id", "question", "answer"):
            value = row.get(key)
            if not isinstance(value, str) or not value.strip():
                raise ValueError(f"field {key!r} must be a nonempty string")
        description = row.get("description", "")
        if description is None:
            description = ""
        if not isinstance(description, str):
            raise ValueError("field 'description' must be a string")
        image = row.get("image")
        if image is not None and not isinstance(image, str):
            raise ValueError("field 'image' must be a string")
        provenance = row.get("provenance", "seed")
        if provenance not in ("seed", "generated"):
            raise ValueError(f"provenance must be 'seed' or 'generated', got {provenance!r}")
        extra = {k: v for k, v in row.items() if k not in _CORE_KEYS}
        return cls(row["id"], row["question"], row["answer"], description, image, provenance, extra)


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputError(f"malformed JSON: {exc.msg}", path=path, line=lineno) from None
            if not isinstance(row, dict):
                raise InputError("expected a JSON object", path=path, line=lineno)
            yield lineno, row


def read_vqa_jsonl(path) -> list[VqaRecord]:
    records = []
    seen = set()
    for lineno, row in _iter_jsonl(path):
        try:
            rec = VqaRecord.from_json(row)
        except ValueError as exc:
            raise InputError(str(exc), path=path, line=lineno) from None
        if rec.id in seen:
            raise InputError(f"duplicate id {rec.id!r}", path=path, line=lineno)
        seen.add(rec.id)
        records.append(rec)
    return records


def write_jsonl(rows, path) -> int:
    """Write dicts one per line, atomically. Returns the row count."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    n = 0
    with open(tmp, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            n += 1
    os.replace(tmp, path)
    return n


def write_vqa_jsonl(records, path) -> int:
    return write_jsonl((r.to_json() for r in records), path)


# --------------------------------------------------------------------------
# manifests and training sets
# --------------------------------------------------------------------------

MANIFEST_KEYS = ("id", "image", "font_size", "lines", "truncated", "missing_glyphs")


def write_manifest(rows, path) -> int:
    return write_jsonl(({k: r[k] for k in MANIFEST_KEYS} for r in rows), path)


def read_manifest(path) -> list[dict]:
    rows = []
    for lineno, row in _iter_jsonl(path):
        missing = [k for k in MANIFEST_KEYS if k not in row]
        if missing:
            raise InputError(f"manifest row missing {missing}", path=path, line=lineno)
        rows.append(row)
    return rows


def conversation_row(record: VqaRecord, image: str) -> dict:
    return {
        "id": record.id,
        "image": image,
        "conversations": [
            {"role": "user", "content": "<image>\n" + record.question},
            {"role": "assistant", "content": record.answer},
        ],
    }


def write_training_set(records, manifest, out_path) -> dict:
    """Join records with their rendered images into conversation rows.

    ``manifest`` is a list of manifest rows (or anything with ``.rows``).
    """
    rows = getattr(manifest, "rows", manifest)
    images = {r["id"]: r["image"] for r in rows}
    missing = [r.id for r in records if r.id not in images]
    if missing:
        raise InputError(f"{len(missing)} record(s) have no rendered image: {missing[:20]}")
    n = write_jsonl((conversation_row(r, images[r.id]) for r in records), out_path)
    by_source: dict[str, int] = {}
    for r in records:
        by_source[r.provenance] = by_source.get(r.provenance, 0) + 1
    return {"count": n, "by_provenance": by_source, "path": str(out_path)}


# --------------------------------------------------------------------------
# matrices
# --------------------------------------------------------------------------


def check_matrix(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} contains NaN or Inf")
    return m


def write_matrix(m, path) -> None:
    m = check_matrix(m)
    data = np.ascontiguousarray(m, dtype="<f4")
    if not np.all(np.isfinite(data)):
        raise InputError("matrix overflows float32")
    rows, cols = data.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TPIM_MAGIC, rows, cols))
        fh.write(data.tobytes())


def _read_tpim(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InputError("file too short for a TPIM header", path=path)
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != TPIM_MAGIC:
        raise InputError(f"bad magic {magic!r}, expected {TPIM_MAGIC!r}", path=path)
    payload = len(raw) - _HEADER.size
    if payload != 4 * rows * cols:
        raise InputError(f"header says {rows}x{cols} ({rows * cols} floats) but payload has "
                         f"{payload / 4:g} floats", path=path)
    m = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(rows, cols)
    return check_matrix(m.astype(np.float32))


def _read_csv(path) -> np.ndarray:
    text = Path(path).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    values = []
    for i, r in enumerate(rows):
        try:
            values.append([float(c) for c in r])
        except ValueError:
            if i == 0:
                continue  # header
            raise InputError(f"non-numeric CSV row {i + 1}", path=path) from None
    if values and len({len(r) for r in values}) != 1:
        raise InputError("ragged CSV rows", path=path)
    m = np.asarray(values, dtype=np.float64).reshape(len(values), -1 if values else 0)
    return check_matrix(m)


def read_matrix(path) -> np.ndarray:
    """Read a TPIM file, or CSV when the extension is ``.csv``."""
    if str(path).lower().endswith(".csv"):
        return _read_csv(path)
    return _read_tpim(path)


# --------------------------------------------------------------------------
# distributions
# --------------------------------------------------------------------------


def normalize_distribution(values, tolerance: float = DIST_TOLERANCE) -> np.ndarray:
    p = np.asarray(values, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InputError("distribution must be a nonempty 1-D array")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InputError("distribution entries must be finite and nonnegative")
    total = math.fsum(p.tolist())
    if abs(total - 1.0) > tolerance:
        raise InputError(f"distribution sums to {total!r}, not within {tolerance} of 1")
    return p / total


def read_distribution(path) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc.msg}", path=path) from None
    if not isinstance(data, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                            for v in data):
        raise InputError("distribution must be a JSON array of numbers", path=path)
    try:
        return normalize_distribution(data)
    except InputError as exc:
        raise InputError(str(exc), path=path) from None


def write_distribution(p, path) -> None:
    Path(path).write_text(json.dumps([float(v) for v in np.asarray(p).ravel()]) + "\n",
                          encoding="utf-8")
