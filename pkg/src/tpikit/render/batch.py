"""Parallel batch rendering with input-ordered output."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..dataset_io import write_manifest
from ..errors import InputError, TpiError
from .params import LayoutParams
from .png import DEFAULT_COMPRESS_LEVEL
from .raster import render_tpi

log = logging.getLogger(__name__)


class BatchIOError(TpiError):
    """Rendering stopped on an I/O failure; ``rows`` holds what was written."""

    def __init__(self, message, rows, failed_id):
        super().__init__(message)
        self.rows = rows
        self.failed_id = failed_id


@dataclass
class BatchManifest:
    rows: list[dict] = field(default_factory=list)
    wall_time_s: float = 0.0
    workers: int = 1
    path: Path | None = None

    @property
    def images_per_sec(self) -> float:
        if not self.rows or self.wall_time_s <= 0:
            return 0.0
        return len(self.rows) / self.wall_time_s

    def summary(self) -> str:
        return f"{len(self.rows)} images, {self.wall_time_s:.2f} seconds, {self.images_per_sec:.2f} img/s"


def check_ids(ids) -> None:
    seen = set()
    for i in ids:
        if not isinstance(i, str) or not i or i in (".", "..") or "/" in i or "\\" in i or "\0" in i:
            raise InputError(f"id {i!r} is not usable as a file name")
        if i in seen:
            raise InputError(f"duplicate id {i!r}")
        seen.add(i)


def _render_one(rid: str, text: str, params: LayoutParams, out_dir: Path, compress_level: int) -> dict:
    image = render_tpi(text, params)
    name = f"{rid}.png"
    image.save(out_dir / name, compress_level)
    lay = image.layout
    return {
        "id": rid,
        "image": name,
        "font_size": lay.chosen_font_size_pt,
        "lines": len(lay.lines),
        "truncated": lay.truncated,
        "missing_glyphs": lay.missing_glyphs,
    }


def render_batch(records, params: LayoutParams | None, workers: int, out_dir,
                 manifest_path=None, compress_level: int = DEFAULT_COMPRESS_LEVEL,
                 progress_every: int = 100) -> BatchManifest:
    """Render ``(id, text)`` pairs to ``<out_dir>/<id>.png`` and write a JSONL manifest.

    Rows come back in input order whatever ``workers`` is. Image paths in the
    manifest are relative to ``out_dir``.
    """
    params = params or LayoutParams()
    if workers < 1:
        raise InputError("workers must be >= 1")
    records = [(str(rid), text) for rid, text in records]
    check_ids(rid for rid, _ in records)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = Path(manifest_path) if manifest_path else out_dir / "manifest.jsonl"

    rows: list[dict] = []
    t0 = time.perf_counter()

    def emit(row):
        rows.append(row)
        if progress_every and len(rows) % progress_every == 0:
            log.info("rendered", extra={"done": len(rows), "total": len(records)})

    try:
        if workers == 1:
            for rid, text in records:
                emit(_render_one(rid, text, params, out_dir, compress_level))
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_render_one, rid, text, params, out_dir, compress_level)
                           for rid, text in records]
                try:
                    for fut in futures:
                        emit(fut.result())
                except BaseException:
                    for f in futures:
                        f.cancel()
                    raise
    except OSError as exc:
        failed = records[len(rows)][0] if len(rows) < len(records) else None
        partial = out_dir / "manifest.partial.jsonl"
        write_manifest(rows, partial)
        raise BatchIOError(f"I/O failure after {len(rows)} of {len(records)} images: {exc}",
                           rows, failed) from exc
    wall = time.perf_counter() - t0
    write_manifest(rows, manifest_path)
    manifest = BatchManifest(rows, wall, workers, manifest_path)
    log.info("batch done", extra={"images": len(rows), "seconds": round(wall, 4),
                                  "img_per_s": round(manifest.images_per_sec, 2)})
    return manifest


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))
