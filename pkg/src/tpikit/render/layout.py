"""Greedy word wrapping and top-down font-size search."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import ConfigError
from .font import ELLIPSIS, FontFace, load_face
from .params import LayoutParams


@dataclass(frozen=True)
class LayoutResult:
    chosen_font_size_pt: int
    lines: tuple[str, ...]
    truncated: bool
    text_bbox: tuple[int, int, int, int]
    # True where a line ends inside a word (character-level break)
    broken: tuple[bool, ...] = ()
    line_widths_px: tuple[float, ...] = ()
    line_height_px: int = 0
    line_spacing_px: int = 0
    missing_glyphs: int = 0

    @property
    def total_height_px(self) -> int:
        return total_height(len(self.lines), self.line_height_px, self.line_spacing_px)

    def joined_text(self) -> str:
        """Undo the wrapping: spaces at word breaks, nothing at character breaks."""
        out = []
        for i, line in enumerate(self.lines):
            out.append(line)
            if i < len(self.lines) - 1 and not self.broken[i]:
                out.append(" ")
        return "".join(out)


def total_height(n_lines: int, line_height: int, spacing: int) -> int:
    if n_lines == 0:
        return 0
    return n_lines * line_height + (n_lines - 1) * spacing


def _resolve_face(face) -> FontFace:
    if isinstance(face, str):
        return load_face(face)
    return face


class _Prepared:
    """Per-text glyph metric arrays shared by every candidate size."""

    __slots__ = ("words", "flat", "word_start", "adv", "kern", "xmin", "xmax", "join", "missing")

    def __init__(self, text: str, face):
        words = text.split()
        self.words = words
        self.flat = "".join(words)
        n = len(self.flat)
        adv = np.empty(n, dtype=np.int64)
        kern = np.zeros(n, dtype=np.int64)
        xmin = np.empty(n, dtype=np.int64)
        xmax = np.empty(n, dtype=np.int64)
        join = np.zeros(len(words), dtype=np.int64)
        starts = [0]
        space_adv = face.glyph(" ").advance
        missing = 0
        glyph = face.glyph
        kern_of = face.kern
        k = 0
        prev_last = None
        for wi, word in enumerate(words):
            if prev_last is not None:
                join[wi] = kern_of(prev_last, " ") + space_adv + kern_of(" ", word[0])
            prev = None
            for ch in word:
                g = glyph(ch)
                adv[k] = g.advance
                xmin[k] = g.xmin
                xmax[k] = g.xmax
                if g.missing:
                    missing += 1
                if prev is not None:
                    kern[k - 1] = kern_of(prev, ch)
                prev = ch
                k += 1
            starts.append(k)
            prev_last = word[-1]
        self.word_start = np.asarray(starts, dtype=np.int64)
        self.adv, self.kern, self.xmin, self.xmax, self.join = adv, kern, xmin, xmax, join
        self.missing = missing

    def pens(self) -> np.ndarray:
        """Pen position of every flat character as if the whole text were one line."""
        delta = self.adv + self.kern
        delta[self.word_start[1:-1] - 1] += self.join[1:]
        out = np.zeros(len(self.flat), dtype=np.int64)
        np.cumsum(delta[:-1], out=out[1:])
        return out

    def wrap(self, scale: float, max_w: float):
        return kernels.greedy_wrap(self.word_start, self.adv, self.kern, self.xmin, self.xmax,
                                   self.join, scale, max_w)

    def line_text(self, cs: int, ce: int) -> str:
        ws = self.word_start
        w = bisect.bisect_right(ws, cs) - 1
        pieces = []
        while w < len(self.words) and ws[w] < ce:
            pieces.append(self.flat[max(cs, ws[w]):min(ce, ws[w + 1])])
            w += 1
        return " ".join(pieces)


def line_metrics(line: str, face) -> tuple[np.ndarray, int, int, int]:
    """Pen positions and ``(advance, ink_right, ink_left)`` of a line, in font units."""
    n = len(line)
    pens = np.zeros(n, dtype=np.int64)
    adv = inkr = inkl = 0
    pen = 0
    prev = None
    for i, ch in enumerate(line):
        if prev is not None:
            pen += face.kern(prev, ch)
        g = face.glyph(ch)
        pens[i] = pen
        inkr = max(inkr, pen + g.xmax)
        inkl = min(inkl, pen + g.xmin)
        pen += g.advance
        adv = pen
        prev = ch
    return pens, adv, inkr, inkl


def measure_line(line: str, font_size_pt: int, face="DejaVu Sans") -> float:
    """Measured width in pixels: advance or ink extent, whichever is wider."""
    face = _resolve_face(face)
    _, adv, inkr, inkl = line_metrics(line, face)
    return (max(adv, inkr) - min(0, inkl)) * (font_size_pt / face.units_per_em)


def wrap_text(text: str, font_size_pt: int, max_width_px: int, font_face="DejaVu Sans") -> list[str]:
    """Greedy left-to-right word wrap; oversized words break at the longest fitting prefix."""
    face = _resolve_face(font_face)
    prep = _Prepared(text, face)
    if not prep.words:
        return []
    n, overflow, (starts, ends, *_rest) = prep.wrap(font_size_pt / face.units_per_em, max_width_px)
    if overflow:
        raise ConfigError(f"a single glyph is wider than {max_width_px}px at size {font_size_pt}")
    return [prep.line_text(int(s), int(e)) for s, e in zip(starts, ends)]


def _build(prep, face, params, size, n, outs, spacing) -> LayoutResult:
    starts, ends, broken, adv, inkr, inkl = outs
    scale = size / face.units_per_em
    lines = tuple(prep.line_text(int(s), int(e)) for s, e in zip(starts[:n], ends[:n]))
    widths = tuple(float((max(a, r) - min(0, lft)) * scale)
                   for a, r, lft in zip(adv[:n].tolist(), inkr[:n].tolist(), inkl[:n].tolist()))
    lh = face.line_height_px(size)
    return _result(params, size, lines, False, tuple(bool(b) for b in broken[:n]), widths, lh,
                   prep.missing, spacing)


def _result(params, size, lines, truncated, broken, widths, lh, missing, spacing) -> LayoutResult:
    p = params.padding_px
    if lines:
        bbox = (p, p, p + int(math.ceil(max(widths))), p + total_height(len(lines), lh, spacing))
    else:
        bbox = (p, p, p, p)
    return LayoutResult(
        chosen_font_size_pt=size,
        lines=lines,
        truncated=truncated,
        text_bbox=bbox,
        broken=broken,
        line_widths_px=widths,
        line_height_px=lh,
        missing_glyphs=missing,
        line_spacing_px=spacing,
    )


def fit_layout(text: str, params: LayoutParams | None = None, face=None) -> LayoutResult:
    """Largest size (stepping down from the default) whose wrap fits the padded canvas.

    Text that does not fit even at the minimum size keeps as many whole leading
    lines as fit, ends the last one with an ellipsis, and is flagged truncated.
    """
    params = params or LayoutParams()
    face = _resolve_face(face if face is not None else params.font_face)
    return _fit(text, params, face)[0]


def _fit(text: str, params: LayoutParams, face):
    """``fit_layout`` plus the prepared text and per-line char ranges/ink for the rasterizer."""
    spacing = params.line_spacing_px
    max_w = params.inner_width
    max_h = params.inner_height
    prep = _Prepared(text, face)
    if not prep.words:
        return _result(params, params.default_font_size_pt, (), False, (), (),
                       face.line_height_px(params.default_font_size_pt), 0, spacing), prep, None

    size = params.min_font_size_pt
    n = 0
    outs = None
    for size in params.font_sizes():
        n, overflow, outs = prep.wrap(size / face.units_per_em, max_w)
        if not overflow and total_height(n, face.line_height_px(size), spacing) <= max_h:
            return _build(prep, face, params, size, n, outs, spacing), prep, outs

    # overflow at the minimum size
    lh = face.line_height_px(size)
    if total_height(n, lh, spacing) <= max_h:
        # only reachable when a glyph is wider than the canvas; keep the layout
        return _build(prep, face, params, size, n, outs, spacing), prep, outs
    keep = max((max_h + spacing) // (lh + spacing), 0)
    full = _build(prep, face, params, size, n, outs, spacing)
    lines = list(full.lines[:keep])
    broken = list(full.broken[:keep])
    widths = list(full.line_widths_px[:keep])
    if lines:
        last = lines[-1]
        while True:
            w = measure_line(last + ELLIPSIS, size, face)
            if w <= max_w or not last:
                break
            last = last[:-1].rstrip()
        lines[-1] = last + ELLIPSIS
        broken[-1] = False
        widths[-1] = measure_line(lines[-1], size, face)
    result = _result(params, size, tuple(lines), True, tuple(broken), tuple(widths), lh,
                     prep.missing, spacing)
    return result, prep, outs
