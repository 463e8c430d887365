"""Slide typing, layout selection, edit generation, and edit application.

Layouts ship as data files: HTML-like markup with {{name}} slots plus a JSON
sidecar manifest (id, slide type, placeholder table, defaults).
"""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import GatewayError, NoLayoutForType
from .ingest import FIGURE, HEADING, LIST, PARAGRAPH, Block
from .modelgw import ModelGateway, load_template, render_prompt
from .outliner import ContentSegment

logger = logging.getLogger(__name__)

MAX_LIST_ITEMS = 6
PLACEHOLDER_ASSET = "placeholder"

REPLACE_TEXT = "replace_text"
INSERT_IMAGE = "insert_image"
ADD_LIST = "add_list"

_KIND_FOR_OP = {REPLACE_TEXT: {"title", "text"}, INSERT_IMAGE: {"image"}, ADD_LIST: {"list"}}


class SlideType(enum.Enum):
    TITLE_INTRO = "title_intro"
    BULLET = "bullet"
    FIGURE_DESCRIPTION = "figure_description"


@dataclass(frozen=True)
class LayoutSchema:
    id: str
    slide_type: SlideType
    placeholders: dict[str, str]          # name -> title | text | list | image
    template: str                         # markup with {{name}} slots
    defaults: dict[str, object]

    def __post_init__(self):
        slots = re.findall(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}", self.template)
        if sorted(slots) != sorted(self.placeholders):
            raise ValueError(f"layout {self.id}: template slots {sorted(slots)} "
                             f"!= declared placeholders {sorted(self.placeholders)}")


@dataclass(frozen=True)
class EditOperation:
    op: str                               # replace_text | insert_image | add_list
    placeholder: str
    text: str = ""
    asset_ref: str = ""
    alt_text: str = ""
    items: tuple[str, ...] = ()


@dataclass(frozen=True)
class SlideDoc:
    schema: LayoutSchema
    values: dict[str, object]             # name -> str | tuple[str, ...] | (ref, alt)

    def markup(self) -> str:
        def fill(m: re.Match) -> str:
            name = m.group(1)
            kind = self.schema.placeholders[name]
            value = self.values[name]
            if kind == "list":
                return "<ul>" + "".join(f"<li>{v}</li>" for v in value) + "</ul>"
            if kind == "image":
                ref, alt = value
                return f'<img src="{ref}" alt="{alt}"/>'
            return str(value)
        return re.sub(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}", fill, self.schema.template)


@dataclass(frozen=True)
class ImageAsset:
    asset_ref: str
    origin: str                           # document_figure | corpus | placeholder


class LocalCorpusProvider:
    """Resolves keywords against image files in a directory by filename stem."""

    def __init__(self, corpus_dir: str | Path) -> None:
        self.corpus_dir = Path(corpus_dir)

    def find(self, keyword: str) -> str | None:
        if not self.corpus_dir.is_dir():
            return None
        want = keyword.strip().lower()
        for path in sorted(self.corpus_dir.iterdir()):
            if path.is_file() and path.stem.lower() == want:
                return str(path)
        return None


def load_layout_library() -> list[LayoutSchema]:
    root = resources.files("slidecast.data.layouts")
    schemas = []
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            manifest = json.loads(entry.read_text("utf-8"))
            template = (root / (manifest["id"] + ".html")).read_text("utf-8")
            schemas.append(LayoutSchema(
                id=manifest["id"],
                slide_type=SlideType(manifest["slide_type"]),
                placeholders=dict(manifest["placeholders"]),
                template=template,
                defaults=_normalize_defaults(manifest["defaults"], manifest["placeholders"]),
            ))
    return schemas


def classify_slide_type(segment: ContentSegment) -> SlideType:
    if segment.is_first:
        return SlideType.TITLE_INTRO
    if any(b.kind == FIGURE for b in segment.blocks):
        return SlideType.FIGURE_DESCRIPTION
    return SlideType.BULLET


def select_layout(slide_type: SlideType, library: list[LayoutSchema]) -> LayoutSchema:
    for schema in sorted(library, key=lambda s: s.id):
        if schema.slide_type == slide_type:
            return schema
    raise NoLayoutForType(f"no layout schema for slide type {slide_type.value}")


def generate_edits(segment: ContentSegment, schema: LayoutSchema,
                   gateway: ModelGateway) -> list[EditOperation]:
    """Gateway-proposed edit program, validated; deterministic fallback on failure."""
    prompt = render_prompt(load_template("edits"), {
        "segment_title": segment.title,
        "segment_text": _segment_text(segment),
        "placeholders": "\n".join(f"- {name}: {kind}"
                                  for name, kind in schema.placeholders.items()),
        "max_items": str(MAX_LIST_ITEMS),
    })
    try:
        completion = gateway.ask("edits", prompt)
        ops = _parse_edit_payload(completion.text, schema)
    except GatewayError as exc:
        logger.warning("edit generation failed for slide %d (%s); using fallback",
                       segment.index, exc)
        ops = []
    if not ops:
        ops = fallback_edits(segment, schema)
    return ops


def fallback_edits(segment: ContentSegment, schema: LayoutSchema) -> list[EditOperation]:
    """Deterministic edit program built directly from the segment's blocks."""
    ops: list[EditOperation] = []
    paragraphs = [b for b in segment.blocks if b.kind == PARAGRAPH]
    figures = [b for b in segment.blocks if b.kind == FIGURE]
    list_blocks = [b for b in segment.blocks if b.kind == LIST]

    items: list[str] = []
    for b in list_blocks:
        items.extend(b.items)
    if not items:
        items = [first_sentence(p.text) for p in paragraphs]
    items = [i for i in items if i][:MAX_LIST_ITEMS]

    for name, kind in schema.placeholders.items():
        if kind == "title":
            ops.append(EditOperation(REPLACE_TEXT, name, text=segment.title))
        elif kind == "text":
            text = " ".join(sentences(paragraphs[0].text)[:2]) if paragraphs \
                else (figures[0].caption if figures else segment.title)
            if text:
                ops.append(EditOperation(REPLACE_TEXT, name, text=text))
        elif kind == "list" and items:
            ops.append(EditOperation(ADD_LIST, name, items=tuple(items)))
        elif kind == "image" and figures:
            fig = figures[0]
            alt = fig.alt or fig.caption or segment.title
            ops.append(EditOperation(INSERT_IMAGE, name, asset_ref=fig.asset_ref,
                                     alt_text=alt))
    return ops


def apply_edits(schema: LayoutSchema, ops: list[EditOperation],
                asset_resolver=None) -> SlideDoc:
    """Apply validated operations in order; untouched placeholders keep defaults.

    Conflicting writes to the same placeholder: last wins. Images whose asset
    cannot be resolved fall back to the placeholder graphic, keeping alt text.
    """
    resolve = asset_resolver or _file_exists
    values = dict(schema.defaults)
    for op in ops:
        kind = schema.placeholders.get(op.placeholder)
        if kind is None or op.op not in _KIND_FOR_OP or kind not in _KIND_FOR_OP[op.op]:
            logger.warning("dropping edit %s on placeholder %r (layout %s)",
                           op.op, op.placeholder, schema.id)
            continue
        if op.op == REPLACE_TEXT:
            values[op.placeholder] = op.text
        elif op.op == ADD_LIST:
            values[op.placeholder] = tuple(op.items[:MAX_LIST_ITEMS])
        elif op.op == INSERT_IMAGE:
            ref = op.asset_ref if op.asset_ref and resolve(op.asset_ref) else PLACEHOLDER_ASSET
            if ref == PLACEHOLDER_ASSET and op.asset_ref:
                logger.warning("image asset %r not resolvable; using placeholder graphic",
                               op.asset_ref)
            alt = op.alt_text or "illustration"
            values[op.placeholder] = (ref, alt)
    return SlideDoc(schema=schema, values=values)


def retrieve_image(keyword: str, provider: LocalCorpusProvider) -> ImageAsset | None:
    if not keyword or not keyword.strip():
        raise ValueError("keyword must be non-empty")
    ref = provider.find(keyword)
    if ref is None:
        return None
    return ImageAsset(asset_ref=ref, origin="corpus")


def sentences(text: str) -> list[str]:
    parts = re.split(r"(?<=[.!?])\s+", text.strip())
    return [p.strip() for p in parts if p.strip()]


def first_sentence(text: str) -> str:
    parts = sentences(text)
    return parts[0] if parts else ""


def _segment_text(segment: ContentSegment, max_chars: int = 4000) -> str:
    chunks = []
    for b in segment.blocks:
        if b.kind == LIST:
            chunks.append("\n".join("- " + i for i in b.items))
        elif b.kind == FIGURE:
            chunks.append(f"[figure: {b.caption or b.alt}]")
        else:
            chunks.append(b.text)
    return "\n\n".join(chunks)[:max_chars]


def _parse_edit_payload(text: str, schema: LayoutSchema) -> list[EditOperation]:
    start, end = text.find("["), text.rfind("]")
    if start < 0 or end <= start:
        return []
    try:
        raw = json.loads(text[start:end + 1])
    except json.JSONDecodeError:
        return []
    if not isinstance(raw, list):
        return []
    ops: list[EditOperation] = []
    for entry in raw:
        if not isinstance(entry, dict):
            continue
        op = entry.get("op", "")
        name = str(entry.get("placeholder", ""))
        kind = schema.placeholders.get(name)
        if kind is None or op not in _KIND_FOR_OP or kind not in _KIND_FOR_OP[op]:
            logger.warning("dropping invalid edit %r targeting %r", op, name)
            continue
        if op == REPLACE_TEXT:
            ops.append(EditOperation(op, name, text=str(entry.get("text", ""))))
        elif op == ADD_LIST:
            items = tuple(str(i) for i in entry.get("items", []))[:MAX_LIST_ITEMS]
            if items:
                ops.append(EditOperation(op, name, items=items))
        elif op == INSERT_IMAGE:
            alt = str(entry.get("alt_text", "")).strip()
            if not alt:
                logger.warning("dropping insert_image on %r with empty alt text", name)
                continue
            ops.append(EditOperation(op, name, asset_ref=str(entry.get("asset_ref", "")),
                                     alt_text=alt))
    return ops


def _normalize_defaults(defaults: dict, placeholders: dict[str, str]) -> dict[str, object]:
    out: dict[str, object] = {}
    for name, kind in placeholders.items():
        value = defaults.get(name)
        if kind == "list":
            out[name] = tuple(value or ())
        elif kind == "image":
            if isinstance(value, dict):
                out[name] = (value.get("asset_ref", PLACEHOLDER_ASSET),
                             value.get("alt", "illustration"))
            else:
                out[name] = (PLACEHOLDER_ASSET, "illustration")
        else:
            out[name] = value or ""
    return out


def _file_exists(ref: str) -> bool:
    return Path(ref).is_file()
