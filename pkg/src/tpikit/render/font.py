"""Bundled font faces: table-derived metrics for layout, FreeType masks for raster.

Layout never touches FreeType: advances, kerning and ink extents come straight
from the font's ``hmtx``/``kern``/``glyf``/``hhea`` tables in integer font
units, so line breaks and the chosen size are identical on every platform.
Only the glyph coverage masks come from the rasterizer.
"""

from __future__ import annotations

import functools
import threading
from dataclasses import dataclass
from importlib import resources

import numpy as np
from fontTools.ttLib import TTFont
from PIL import Image, ImageDraw, ImageFont

from ..errors import ConfigError

BUNDLED_FACES = {
    "DejaVu Sans": "DejaVuSans.ttf",
}

ELLIPSIS = "…"


@dataclass(frozen=True)
class GlyphMetrics:
    advance: int
    xmin: int
    xmax: int
    missing: bool


class FontFace:
    """Metrics for one TrueType face, in font units."""

    def __init__(self, path, name: str | None = None):
        self.path = str(path)
        self.name = name or self.path
        tt = TTFont(self.path, lazy=True)
        self.units_per_em = int(tt["head"].unitsPerEm)
        self.ascent = int(tt["hhea"].ascent)
        self.descent = int(tt["hhea"].descent)
        self._cmap = tt.getBestCmap()
        self._hmtx = tt["hmtx"]
        self._glyf = tt["glyf"] if "glyf" in tt else None
        self._notdef = tt.getGlyphOrder()[0]
        self._kern: dict[tuple[str, str], int] = {}
        if "kern" in tt:
            for sub in tt["kern"].kernTables:
                table = getattr(sub, "kernTable", None)
                if table:
                    for pair, value in table.items():
                        self._kern.setdefault(pair, int(value))
        self._tt = tt
        self._lock = threading.Lock()
        self._glyphs: dict[str, GlyphMetrics] = {}
        self._kern_cache: dict[tuple[str, str], int] = {}
        self._masks: dict[int, GlyphAtlas] = {}

    def __repr__(self):
        return f"FontFace({self.name!r})"

    def glyph_name(self, ch: str) -> str:
        return self._cmap.get(ord(ch), self._notdef)

    def glyph(self, ch: str) -> GlyphMetrics:
        gm = self._glyphs.get(ch)
        if gm is not None:
            return gm
        with self._lock:
            name = self.glyph_name(ch)
            advance, lsb = self._hmtx[name]
            xmin = xmax = 0
            if self._glyf is not None:
                g = self._glyf[name]
                if getattr(g, "numberOfContours", 0) != 0 and hasattr(g, "xMin"):
                    xmin, xmax = int(g.xMin), int(g.xMax)
            gm = GlyphMetrics(int(advance), xmin, xmax, ord(ch) not in self._cmap)
            self._glyphs[ch] = gm
        return gm

    def advance(self, ch: str) -> int:
        return self.glyph(ch).advance

    def kern(self, left: str, right: str) -> int:
        key = (left, right)
        v = self._kern_cache.get(key)
        if v is None:
            v = self._kern.get((self.glyph_name(left), self.glyph_name(right)), 0)
            self._kern_cache[key] = v
        return v

    def is_missing(self, ch: str) -> bool:
        return self.glyph(ch).missing

    def scale(self, size: int) -> float:
        return size / self.units_per_em

    def line_height_px(self, size: int) -> int:
        return int(np.ceil((self.ascent - self.descent) * size / self.units_per_em))

    def ascent_px(self, size: int) -> int:
        return int(round(self.ascent * size / self.units_per_em))

    def atlas(self, size: int) -> "GlyphAtlas":
        at = self._masks.get(size)
        if at is None:
            with self._lock:
                at = self._masks.get(size)
                if at is None:
                    at = GlyphAtlas(self.path, size)
                    self._masks[size] = at
        return at


class GlyphAtlas:
    """Coverage masks for one face at one pixel size, packed into a flat buffer.

    Offsets ``dx, dy`` place a mask relative to the pen position on the
    baseline. The buffer only grows; glyph ids stay valid.
    """

    def __init__(self, path: str, size: int):
        self.size = size
        self._font = ImageFont.truetype(path, size, layout_engine=ImageFont.Layout.BASIC)
        self._ids: dict[str, int] = {}
        self._chunks: list[np.ndarray] = []
        self._off: list[int] = []
        self._w: list[int] = []
        self._h: list[int] = []
        self.dx: list[int] = []
        self.dy: list[int] = []
        self._total = 0
        self._lock = threading.Lock()
        self._packed = None

    def _render(self, ch: str) -> tuple[np.ndarray, int, int]:
        x0, y0, x1, y1 = self._font.getbbox(ch, anchor="ls")
        w, h = x1 - x0, y1 - y0
        if w <= 0 or h <= 0:
            return np.zeros((0, 0), dtype=np.uint8), 0, 0
        im = Image.new("L", (w, h), 0)
        ImageDraw.Draw(im).text((-x0, -y0), ch, font=self._font, fill=255, anchor="ls")
        return np.asarray(im, dtype=np.uint8), x0, y0

    def ids_for(self, chars) -> np.ndarray:
        """Glyph ids for ``chars``, rasterizing unseen ones."""
        ids = self._ids
        unseen = [c for c in set(chars) if c not in ids]
        if unseen:
            with self._lock:
                for ch in sorted(unseen):
                    if ch in ids:
                        continue
                    mask, dx, dy = self._render(ch)
                    self._chunks.append(mask.ravel())
                    self._off.append(self._total)
                    self._w.append(mask.shape[1])
                    self._h.append(mask.shape[0])
                    self.dx.append(dx)
                    self.dy.append(dy)
                    self._total += mask.size
                    ids[ch] = len(self._off) - 1
                self._packed = None
        return np.fromiter((ids[c] for c in chars), dtype=np.int64, count=len(chars))

    def packed(self):
        """``(atlas, offsets, widths, heights, dx, dy)`` as numpy arrays."""
        p = self._packed
        if p is None:
            with self._lock:
                flat = np.concatenate(self._chunks) if self._chunks else np.zeros(0, dtype=np.uint8)
                p = (
                    np.ascontiguousarray(flat, dtype=np.uint8),
                    np.asarray(self._off, dtype=np.int64),
                    np.asarray(self._w, dtype=np.int64),
                    np.asarray(self._h, dtype=np.int64),
                    np.asarray(self.dx, dtype=np.int64),
                    np.asarray(self.dy, dtype=np.int64),
                )
                self._packed = p
        return p


@functools.lru_cache(maxsize=None)
def load_face(name: str = "DejaVu Sans") -> FontFace:
    """Load a face bundled with the package. Host fonts are never consulted."""
    try:
        filename = BUNDLED_FACES[name]
    except KeyError:
        raise ConfigError(f"unknown font face {name!r}; bundled: {sorted(BUNDLED_FACES)}") from None
    path = resources.files("tpikit") / "fonts" / filename
    return FontFace(str(path), name=name)
