"""Rasterizes populated slide markup to fixed-size PNG frames.

Preferred path: an external rasterizer subprocess (markup file in, PNG out).
Fallback: a minimal built-in renderer that draws title/text/list content with
Pillow on a solid background, so the pipeline runs without a browser-grade
rasterizer at reduced fidelity.
"""

from __future__ import annotations

import io
import logging
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont

from .errors import RasterizerFailure
from .slidecomp import PLACEHOLDER_ASSET, LayoutSchema, SlideDoc

logger = logging.getLogger(__name__)

BACKGROUND = (250, 250, 252)
TITLE_COLOR = (22, 46, 92)
BODY_COLOR = (40, 40, 48)
ACCENT = (46, 110, 190)
IMAGE_FALLBACK_FILL = (210, 214, 220)


@dataclass(frozen=True)
class RenderConfig:
    width: int = 1920
    height: int = 1080
    rasterizer_cmd: tuple[str, ...] | None = None


@dataclass(frozen=True)
class SlideFrame:
    slide_index: int
    png: bytes
    width: int
    height: int
    source: SlideDoc


def render_slide(doc: SlideDoc, cfg: RenderConfig, slide_index: int = 1) -> SlideFrame:
    if cfg.rasterizer_cmd:
        png = _rasterize_external(doc.markup(), cfg)
    else:
        png = _rasterize_internal(doc, cfg)
    return SlideFrame(slide_index=slide_index, png=png,
                      width=cfg.width, height=cfg.height, source=doc)


def internal_layout_map(schema: LayoutSchema,
                        cfg: RenderConfig = RenderConfig()) -> dict[str, tuple[int, int, int, int]]:
    """Pixel regions (x0, y0, x1, y1) the built-in renderer uses per placeholder."""
    w, h = cfg.width, cfg.height
    has_image = "image" in schema.placeholders.values()
    body_right = int(w * 0.57) if has_image else w - 80
    regions: dict[str, tuple[int, int, int, int]] = {}
    body_top = 240
    for name, kind in schema.placeholders.items():
        if kind == "title":
            regions[name] = (80, 50, w - 80, 170)
        elif kind in ("text", "list"):
            regions[name] = (80, body_top, body_right, h - 80)
            body_top = (body_top + h - 80) // 2 + 20   # stack if a second body slot exists
        elif kind == "image":
            regions[name] = (int(w * 0.60), 240, w - 80, h - 80)
    return regions


def _rasterize_external(markup: str, cfg: RenderConfig) -> bytes:
    with tempfile.TemporaryDirectory(prefix="slidecast-raster-") as tmp:
        markup_path = Path(tmp) / "slide.html"
        out_path = Path(tmp) / "slide.png"
        markup_path.write_text(markup, encoding="utf-8")
        cmd = list(cfg.rasterizer_cmd) + [str(markup_path), str(out_path)]
        try:
            proc = subprocess.run(cmd, capture_output=True, timeout=120)
        except FileNotFoundError as exc:
            raise RasterizerFailure(f"rasterizer not found: {cfg.rasterizer_cmd[0]}") from exc
        if proc.returncode != 0 or not out_path.is_file():
            raise RasterizerFailure(
                f"rasterizer exited {proc.returncode}: "
                f"{proc.stderr.decode('utf-8', errors='replace')[:500]}")
        png = out_path.read_bytes()
    with Image.open(io.BytesIO(png)) as img:
        if img.size != (cfg.width, cfg.height):
            raise RasterizerFailure(f"rasterizer produced {img.size}, "
                                    f"expected {(cfg.width, cfg.height)}")
    return png


def _rasterize_internal(doc: SlideDoc, cfg: RenderConfig) -> bytes:
    img = Image.new("RGB", (cfg.width, cfg.height), BACKGROUND)
    draw = ImageDraw.Draw(img)
    regions = internal_layout_map(doc.schema, cfg)
    draw.rectangle((0, 190, cfg.width, 198), fill=ACCENT)

    for name, kind in doc.schema.placeholders.items():
        region = regions[name]
        value = doc.values[name]
        if kind == "title":
            _draw_wrapped(draw, str(value), region, _font(64), TITLE_COLOR)
        elif kind == "text":
            _draw_wrapped(draw, str(value), region, _font(40), BODY_COLOR)
        elif kind == "list":
            lines = ["•  " + item for item in value]
            _draw_wrapped(draw, "\n".join(lines), region, _font(40), BODY_COLOR,
                          line_gap=26)
        elif kind == "image":
            _draw_image(img, draw, value, region)

    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _font(size: int):
    try:
        return ImageFont.load_default(size=size)
    except TypeError:      # older Pillow: fixed-size bitmap font only
        return ImageFont.load_default()


def _draw_wrapped(draw: ImageDraw.ImageDraw, text: str,
                  region: tuple[int, int, int, int], font, color,
                  line_gap: int = 12) -> None:
    x0, y0, x1, y1 = region
    max_width = x1 - x0
    y = y0
    for paragraph in text.split("\n"):
        line = ""
        for word in paragraph.split():
            candidate = (line + " " + word).strip()
            if draw.textlength(candidate, font=font) <= max_width or not line:
                line = candidate
            else:
                y = _emit_line(draw, line, x0, y, y1, font, color, line_gap)
                line = word
            if y > y1:
                return
        if line:
            y = _emit_line(draw, line, x0, y, y1, font, color, line_gap)
        if y > y1:
            return


def _emit_line(draw, line, x, y, y_max, font, color, line_gap) -> int:
    bbox = draw.textbbox((x, y), line, font=font)
    if bbox[3] <= y_max:
        draw.text((x, y), line, font=font, fill=color)
    return bbox[3] + line_gap


def _draw_image(img: Image.Image, draw: ImageDraw.ImageDraw,
                value: tuple[str, str], region: tuple[int, int, int, int]) -> None:
    ref, alt = value
    x0, y0, x1, y1 = region
    if ref != PLACEHOLDER_ASSET and Path(ref).is_file():
        try:
            with Image.open(ref) as asset:
                asset = asset.convert("RGB")
                asset.thumbnail((x1 - x0, y1 - y0))
                img.paste(asset, (x0, y0))
                return
        except Exception as exc:
            logger.warning("could not load image asset %r: %s", ref, exc)
    draw.rectangle(region, fill=IMAGE_FALLBACK_FILL, outline=ACCENT, width=4)
    _draw_wrapped(draw, alt, (x0 + 24, (y0 + y1) // 2 - 30, x1 - 24, y1 - 24),
                  _font(36), BODY_COLOR)
