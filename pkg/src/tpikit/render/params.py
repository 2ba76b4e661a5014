from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from PIL import ImageColor

from ..errors import ConfigError

RGB = tuple[int, int, int]


def parse_color(value) -> RGB:
    """Accept a CSS/X11 name, ``#rrggbb``, ``"r,g,b"`` or a 3-sequence."""
    if isinstance(value, str):
        if "," in value:
            parts = value.split(",")
            try:
                rgb = tuple(int(p.strip()) for p in parts)
            except ValueError:
                raise ConfigError(f"bad color {value!r}") from None
        else:
            try:
                rgb = ImageColor.getrgb(value)[:3]
            except ValueError:
                raise ConfigError(f"bad color {value!r}") from None
    else:
        rgb = tuple(int(v) for v in value)
    if len(rgb) != 3 or any(not 0 <= c <= 255 for c in rgb):
        raise ConfigError(f"color must be three values in [0, 255], got {value!r}")
    return rgb  # type: ignore[return-value]


@dataclass(frozen=True)
class LayoutParams:
    """Renderer parameters. Font sizes are pixel ems (Pillow's ``size``)."""

    canvas_width_px: int = 336
    canvas_height_px: int = 336
    padding_px: int = 8
    default_font_size_pt: int = 32
    min_font_size_pt: int = 4
    font_size_step_pt: int = 1
    line_spacing_px: int = 4
    background_color: RGB = (255, 255, 255)
    text_color: RGB = (0, 0, 0)
    font_face: str = "DejaVu Sans"

    def __post_init__(self):
        object.__setattr__(self, "background_color", parse_color(self.background_color))
        object.__setattr__(self, "text_color", parse_color(self.text_color))
        for name in ("canvas_width_px", "canvas_height_px", "default_font_size_pt",
                     "min_font_size_pt", "font_size_step_pt"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        for name in ("padding_px", "line_spacing_px"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"{name} must be a nonnegative integer, got {v!r}")
        if self.min_font_size_pt > self.default_font_size_pt:
            raise ConfigError("min_font_size_pt must not exceed default_font_size_pt")
        if 2 * self.padding_px >= self.canvas_width_px or 2 * self.padding_px >= self.canvas_height_px:
            raise ConfigError("padding leaves no drawable area")

    @property
    def inner_width(self) -> int:
        return self.canvas_width_px - 2 * self.padding_px

    @property
    def inner_height(self) -> int:
        return self.canvas_height_px - 2 * self.padding_px

    def font_sizes(self):
        """Candidate sizes, largest first, always ending at the minimum."""
        s = self.default_font_size_pt
        while s > self.min_font_size_pt:
            yield s
            s -= self.font_size_step_pt
        yield self.min_font_size_pt

    def replace(self, **changes) -> "LayoutParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["background_color"] = list(self.background_color)
        d["text_color"] = list(self.text_color)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "LayoutParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown layout keys: {sorted(unknown)}")
        return cls(**data)
