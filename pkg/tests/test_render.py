import io
import json
import zlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from tpikit.errors import ConfigError, InputError
from tpikit.render import BatchIOError, LayoutParams, parse_color, render_batch, render_tpi
from tpikit.render.png import encode_png
from tpikit.render.raster import color_lut
from tpikit.synth import lorem_corpus


def ink_mask(img, params):
    return np.any(img.array() != np.array(params.background_color, dtype=np.uint8), axis=2)


def test_empty_text_is_blank_canvas():
    img = render_tpi("")
    arr = img.array()
    assert arr.shape == (336, 336, 3)
    assert np.all(arr == 255)


def test_ink_inside_text_box_and_padding():
    p = LayoutParams()
    img = render_tpi("The quick brown fox jumps over the lazy dog.", p)
    mask = ink_mask(img, p)
    assert mask.any()
    ys, xs = np.nonzero(mask)
    x0, y0, x1, y1 = img.layout.text_bbox
    assert x0 <= xs.min() and xs.max() < x1 and y0 <= ys.min() and ys.max() < y1
    pad = p.padding_px
    assert pad <= x0 and x1 <= p.canvas_width_px - pad and pad <= y0 and y1 <= p.canvas_height_px - pad


@settings(max_examples=40, deadline=None)
@given(st.text(min_size=0, max_size=400), st.sampled_from(["black", "red", "#1e90ff", "0,128,0"]),
       st.sampled_from(["white", "#ffffe0", "10,10,10"]))
def test_ink_containment_property(text, fg, bg):
    p = LayoutParams(text_color=fg, background_color=bg)
    img = render_tpi(text, p)
    mask = ink_mask(img, p)
    if mask.any():
        ys, xs = np.nonzero(mask)
        x0, y0, x1, y1 = img.layout.text_bbox
        assert x0 <= xs.min() and xs.max() < x1 and y0 <= ys.min() and ys.max() < y1
    assert img.width == p.canvas_width_px and img.height == p.canvas_height_px


def test_colors_used_verbatim():
    p = LayoutParams(text_color="red", background_color="white")
    arr = render_tpi("IIII", p).array()
    colors = {tuple(c) for c in arr.reshape(-1, 3)}
    assert (255, 255, 255) in colors and (255, 0, 0) in colors
    # anti-aliased pixels lie on the segment between the two colors
    assert all(c[0] == 255 and c[1] == c[2] for c in colors)


def test_color_lut_endpoints():
    lut = color_lut((10, 20, 30), (200, 100, 50))
    assert tuple(lut[0]) == (200, 100, 50)
    assert tuple(lut[255]) == (10, 20, 30)


def test_render_is_deterministic():
    text = lorem_corpus(1, 5)[0][1]
    assert render_tpi(text).pixels == render_tpi(text).pixels


def test_png_roundtrip_through_pillow():
    img = render_tpi("round trip check")
    data = img.to_png()
    back = Image.open(io.BytesIO(data))
    assert back.mode == "RGB"
    assert np.array_equal(np.asarray(back), img.array())


@pytest.mark.parametrize("level", [0, 1, 6, 9])
def test_png_encoder_levels(level):
    rng = np.random.default_rng(level)
    arr = rng.integers(0, 256, size=(7, 13, 3), dtype=np.uint8)
    data = encode_png(arr, level)
    assert data.startswith(b"\x89PNG\r\n\x1a\n")
    assert np.array_equal(np.asarray(Image.open(io.BytesIO(data))), arr)


def test_png_chunk_crcs_valid():
    data = encode_png(np.zeros((2, 2, 3), dtype=np.uint8))
    pos = 8
    tags = []
    while pos < len(data):
        n = int.from_bytes(data[pos:pos + 4], "big")
        tag = data[pos + 4:pos + 8]
        body = data[pos + 8:pos + 8 + n]
        crc = int.from_bytes(data[pos + 8 + n:pos + 12 + n], "big")
        assert zlib.crc32(tag + body) == crc
        tags.append(tag)
        pos += 12 + n
    assert tags == [b"IHDR", b"IDAT", b"IEND"]


def test_parse_color_forms():
    assert parse_color("red") == (255, 0, 0)
    assert parse_color("#00ff00") == (0, 255, 0)
    assert parse_color("1, 2, 3") == (1, 2, 3)
    assert parse_color([4, 5, 6]) == (4, 5, 6)
    with pytest.raises(ConfigError):
        parse_color("not-a-color")
    with pytest.raises(ConfigError):
        parse_color((1, 2, 300))


@pytest.mark.parametrize("bad", [
    {"canvas_width_px": 0}, {"padding_px": -1}, {"min_font_size_pt": 40},
    {"font_size_step_pt": 0}, {"padding_px": 168}, {"line_spacing_px": 1.5},
])
def test_invalid_params_rejected(bad):
    with pytest.raises(ConfigError):
        LayoutParams(**bad)


def test_params_dict_roundtrip():
    p = LayoutParams(text_color="navy", canvas_width_px=400)
    assert LayoutParams.from_dict(p.to_dict()) == p
    with pytest.raises(ConfigError):
        LayoutParams.from_dict({"font": "x"})


def test_font_sizes_descend_to_min():
    p = LayoutParams(default_font_size_pt=10, min_font_size_pt=5, font_size_step_pt=2)
    assert list(p.font_sizes()) == [10, 8, 6, 5]


def test_unknown_font_face_rejected():
    with pytest.raises(ConfigError):
        render_tpi("x", LayoutParams(font_face="Comic Nonexistent"))


# ---------------------------------------------------------------- batch


def test_batch_outputs_and_manifest(tmp_path):
    recs = lorem_corpus(12, 2)
    m = render_batch(recs, None, 3, tmp_path)
    assert [r["id"] for r in m.rows] == [rid for rid, _ in recs]
    lines = (tmp_path / "manifest.jsonl").read_text().splitlines()
    assert [json.loads(x) for x in lines] == m.rows
    for row in m.rows:
        assert set(row) == {"id", "image", "font_size", "lines", "truncated", "missing_glyphs"}
        assert (tmp_path / row["image"]).exists()
    assert m.summary().startswith("12 images, ")
    assert m.images_per_sec > 0


def test_batch_empty(tmp_path):
    m = render_batch([], None, 2, tmp_path)
    assert m.rows == []
    assert (tmp_path / "manifest.jsonl").read_text() == ""
    assert sorted(p.name for p in tmp_path.iterdir()) == ["manifest.jsonl"]


def test_batch_duplicate_ids_rejected_before_work(tmp_path):
    with pytest.raises(InputError):
        render_batch([("a", "x"), ("b", "y"), ("a", "z")], None, 1, tmp_path / "out")
    assert not (tmp_path / "out").exists() or not any((tmp_path / "out").iterdir())


@pytest.mark.parametrize("rid", ["../x", "a/b", "", "."])
def test_batch_unsafe_ids_rejected(tmp_path, rid):
    with pytest.raises(InputError):
        render_batch([(rid, "x")], None, 1, tmp_path)


def test_batch_worker_count_does_not_change_output(tmp_path):
    recs = lorem_corpus(30, 4)
    a = render_batch(recs, None, 1, tmp_path / "a")
    b = render_batch(recs, None, 8, tmp_path / "b")
    assert a.rows == b.rows
    assert (tmp_path / "a/manifest.jsonl").read_bytes() == (tmp_path / "b/manifest.jsonl").read_bytes()
    for row in a.rows:
        assert (tmp_path / "a" / row["image"]).read_bytes() == (tmp_path / "b" / row["image"]).read_bytes()


def test_batch_io_failure_reports_partial_output(tmp_path):
    recs = lorem_corpus(5, 1)
    (tmp_path / f"{recs[2][0]}.png").mkdir()  # a directory where a file must go
    with pytest.raises(BatchIOError) as info:
        render_batch(recs, None, 1, tmp_path)
    assert info.value.failed_id == recs[2][0]
    assert [r["id"] for r in info.value.rows] == [recs[0][0], recs[1][0]]
    partial = (tmp_path / "manifest.partial.jsonl").read_text().splitlines()
    assert len(partial) == 2
