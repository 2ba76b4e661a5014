from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from .font import FontFace
from .layout import LayoutResult, _fit, _resolve_face, line_metrics
from .params import LayoutParams
from .png import DEFAULT_COMPRESS_LEVEL, encode_png, write_png


@dataclass(frozen=True)
class RenderedImage:
    width: int
    height: int
    pixels: bytes  # row-major RGB
    layout: LayoutResult

    def array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 3)

    def to_png(self, compress_level: int = DEFAULT_COMPRESS_LEVEL) -> bytes:
        return encode_png(self.array(), compress_level)

    def save(self, path, compress_level: int = DEFAULT_COMPRESS_LEVEL) -> int:
        return write_png(path, self.array(), compress_level)


def _placements(layout: LayoutResult, prep, outs, face: FontFace, params: LayoutParams):
    size = layout.chosen_font_size_pt
    scale = size / face.units_per_em
    atlas = face.atlas(size)
    step = layout.line_height_px + params.line_spacing_px
    ascent = face.ascent_px(size)
    n = len(layout.lines)
    starts, ends, _, _, _, inkl = outs
    # lines that still match the wrap output; a truncated last line is re-measured
    n_ranged = n - 1 if layout.truncated else n
    ids_parts, x_parts, y_parts = [], [], []
    if n_ranged:
        flat_ids = atlas.ids_for(prep.flat)
        pens = prep.pens()
        line_of = np.repeat(np.arange(n_ranged), ends[:n_ranged] - starts[:n_ranged])
        sel = np.concatenate([np.arange(s, e) for s, e in zip(starts[:n_ranged], ends[:n_ranged])])
        origin = -np.minimum(inkl[:n_ranged], 0) * scale
        rel = pens[sel] - pens[starts[:n_ranged]][line_of]
        ids_parts.append(flat_ids[sel])
        x_parts.append(np.floor(origin[line_of] + rel * scale + 0.5).astype(np.int64))
        y_parts.append(line_of * step + ascent)
    if n_ranged < n:
        line = layout.lines[-1]
        lpens, _, _, linkl = line_metrics(line, face)
        ids_parts.append(atlas.ids_for(line))
        x_parts.append(np.floor(-min(0, linkl) * scale + lpens * scale + 0.5).astype(np.int64))
        y_parts.append(np.full(len(line), (n - 1) * step + ascent, dtype=np.int64))
    ids = np.concatenate(ids_parts)
    packed = atlas.packed()
    dx, dy = packed[4], packed[5]
    return packed, ids, np.concatenate(x_parts) + dx[ids], np.concatenate(y_parts) + dy[ids]


def color_lut(fg, bg) -> np.ndarray:
    """``(256, 3)`` table: coverage byte to blended RGB."""
    c = np.arange(256, dtype=np.uint32)[:, None]
    fg = np.asarray(fg, dtype=np.uint32)
    bg = np.asarray(bg, dtype=np.uint32)
    return ((bg * (255 - c) + fg * c + 127) // 255).astype(np.uint8)


def render_tpi(text: str, params: LayoutParams | None = None) -> RenderedImage:
    """Render ``text`` onto a blank canvas at the largest size that fits.

    Lines are anchored at the top-left of the padded area. Glyph ink is clipped
    to the layout's text box, so nothing is drawn outside the padding.
    """
    params = params or LayoutParams()
    face = _resolve_face(params.font_face)
    layout, prep, outs = _fit(text, params, face)
    W, H = params.canvas_width_px, params.canvas_height_px
    canvas = np.empty((H, W, 3), dtype=np.uint8)
    canvas[...] = params.background_color
    if layout.lines:
        x0, y0, x1, y1 = layout.text_bbox
        cov = np.zeros((y1 - y0, x1 - x0), dtype=np.uint8)
        (atlas, g_off, g_w, g_h, _, _), ids, xs, ys = _placements(layout, prep, outs, face, params)
        kernels.blit_max(cov, atlas, g_off, g_w, g_h, ids, xs, ys)
        lut = color_lut(params.text_color, params.background_color)
        canvas[y0:y1, x0:x1] = lut[cov]
    return RenderedImage(W, H, canvas.tobytes(), layout)
