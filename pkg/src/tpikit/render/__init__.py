from .batch import BatchIOError, BatchManifest, render_batch
from .font import ELLIPSIS, FontFace, load_face
from .layout import LayoutResult, fit_layout, measure_line, wrap_text
from .params import LayoutParams, parse_color
from .raster import RenderedImage, render_tpi

__all__ = [
    "BatchIOError",
    "BatchManifest",
    "render_batch",
    "ELLIPSIS",
    "FontFace",
    "LayoutParams",
    "LayoutResult",
    "RenderedImage",
    "fit_layout",
    "load_face",
    "measure_line",
    "parse_color",
    "render_tpi",
    "wrap_text",
]
