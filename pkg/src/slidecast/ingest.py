"""Source-format detection and parsing into an ordered block sequence.

Supported inputs: markdown, html, plain text natively; pdf/docx through an
external extractor subprocess that emits markdown on stdout.
"""

from __future__ import annotations

import hashlib
import logging
import re
import subprocess
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser

from .errors import EmptySource, ExtractorUnavailable, ParseFailure

logger = logging.getLogger(__name__)

FORMATS = ("markdown", "html", "pdf", "docx", "plain")

HEADING = "heading"
PARAGRAPH = "paragraph"
LIST = "list"
FIGURE = "figure"
CODE = "code"


@dataclass(frozen=True)
class RawSource:
    data: bytes
    name_hint: str | None = None


@dataclass(frozen=True)
class Block:
    index: int
    kind: str
    text: str = ""
    level: int = 0                      # headings only, 1..6
    items: tuple[str, ...] = ()         # lists only
    asset_ref: str = ""                 # figures only
    caption: str = ""                   # figures only
    alt: str = ""                       # figures only

    def word_count(self) -> int:
        if self.kind == LIST:
            return sum(len(item.split()) for item in self.items)
        if self.kind == FIGURE:
            return len(self.caption.split())
        return len(self.text.split())


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    blocks: tuple[Block, ...]
    word_count: int


@dataclass(frozen=True)
class IngestConfig:
    min_block_words: int = 8
    boilerplate_patterns: tuple[str, ...] = (
        r"^\s*(home|menu|navigation|skip to content)\s*$",
        r"^\s*(copyright|©|all rights reserved)",
        r"^\s*cookie (policy|settings)\b",
    )
    expected_words: tuple[int, int] = (3000, 8000)


def detect_format(source: RawSource) -> str:
    """Pick one format: magic bytes > extension hint > content heuristics > plain."""
    if not source.data:
        raise EmptySource("source byte sequence is empty")

    head = source.data[:512]
    if head.startswith(b"%PDF-"):
        return "pdf"
    if head.startswith(b"PK\x03\x04") and b"word/" in source.data[:4096]:
        return "docx"

    hint = (source.name_hint or "").lower()
    for ext, fmt in ((".md", "markdown"), (".markdown", "markdown"),
                     (".html", "html"), (".htm", "html"),
                     (".pdf", "pdf"), (".docx", "docx"), (".txt", "plain")):
        if hint.endswith(ext):
            return fmt

    try:
        text = head.decode("utf-8", errors="replace").lstrip().lower()
    except Exception:
        return "plain"
    if text.startswith("<!doctype") or text.startswith("<html") or "<body" in text:
        return "html"
    full = source.data.decode("utf-8", errors="replace")
    if re.search(r"^#{1,6}\s+\S", full, re.MULTILINE) or re.search(r"^[-*]\s+\S", full, re.MULTILINE):
        return "markdown"
    return "plain"


def parse_document(source: RawSource, fmt: str, extractor_cmd: list[str] | None = None) -> Document:
    """Parse source bytes of a known format into an ordered Document."""
    if fmt not in FORMATS:
        raise ParseFailure(f"unknown format: {fmt}")

    if fmt in ("pdf", "docx"):
        text = _run_extractor(source, fmt, extractor_cmd)
        blocks = _parse_markdown(text)
    else:
        text = source.data.decode("utf-8", errors="replace")
        if fmt == "markdown":
            blocks = _parse_markdown(text)
        elif fmt == "html":
            blocks = _parse_html(text)
        else:
            blocks = _parse_plain(text)

    if not blocks:
        raise ParseFailure("no content blocks found")

    blocks = tuple(replace(b, index=i) for i, b in enumerate(blocks))
    title = _pick_title(blocks, source.name_hint)
    doc_id = hashlib.sha1(source.data).hexdigest()[:12]
    return Document(id=doc_id, title=title, blocks=blocks,
                    word_count=sum(b.word_count() for b in blocks))


def normalize_document(doc: Document, cfg: IngestConfig | None = None) -> Document:
    """Strip boilerplate and merge tiny paragraph runs; idempotent."""
    cfg = cfg or IngestConfig()
    patterns = [re.compile(p, re.IGNORECASE) for p in cfg.boilerplate_patterns]

    blocks = [b for b in doc.blocks
              if not (b.kind in (PARAGRAPH, HEADING)
                      and any(p.search(b.text) for p in patterns))]

    changed = True
    while changed:
        changed = False
        merged: list[Block] = []
        for b in blocks:
            prev = merged[-1] if merged else None
            if (b.kind == PARAGRAPH and b.word_count() < cfg.min_block_words
                    and prev is not None and prev.kind == PARAGRAPH):
                merged[-1] = replace(prev, text=prev.text + " " + b.text)
                changed = True
            else:
                merged.append(b)
        blocks = merged

    blocks = [replace(b, index=i) for i, b in enumerate(blocks)]
    total = sum(b.word_count() for b in blocks)
    lo, hi = cfg.expected_words
    if not lo <= total <= hi:
        logger.warning("document %s has %d words, outside the expected %d-%d range",
                       doc.id, total, lo, hi)
    return Document(id=doc.id, title=doc.title, blocks=tuple(blocks), word_count=total)


def serialize_markdown(doc: Document) -> str:
    """Render a Document back to markdown (the supported subset)."""
    out: list[str] = []
    for b in doc.blocks:
        if b.kind == HEADING:
            out.append("#" * b.level + " " + b.text)
        elif b.kind == PARAGRAPH:
            out.append(b.text)
        elif b.kind == LIST:
            out.append("\n".join("- " + item for item in b.items))
        elif b.kind == CODE:
            out.append("```\n" + b.text + "\n```")
        elif b.kind == FIGURE:
            title = f' "{b.caption}"' if b.caption else ""
            out.append(f"![{b.alt}]({b.asset_ref}{title})")
    return "\n\n".join(out) + "\n"


def _run_extractor(source: RawSource, fmt: str, cmd: list[str] | None) -> str:
    if not cmd:
        raise ExtractorUnavailable(f"no extractor configured for {fmt}")
    try:
        proc = subprocess.run(cmd + [fmt], input=source.data,
                              capture_output=True, timeout=120)
    except FileNotFoundError as exc:
        raise ExtractorUnavailable(str(exc)) from exc
    if proc.returncode != 0:
        raise ParseFailure(f"extractor exited {proc.returncode}: "
                           f"{proc.stderr.decode('utf-8', errors='replace')[:500]}")
    return proc.stdout.decode("utf-8")


_IMG_RE = re.compile(r'^!\[(?P<alt>[^\]]*)\]\((?P<ref>\S+?)(?:\s+"(?P<cap>[^"]*)")?\)\s*$')


def _parse_markdown(text: str) -> list[Block]:
    blocks: list[Block] = []
    lines = text.splitlines()
    i = 0
    para: list[str] = []
    items: list[str] = []

    def flush_para() -> None:
        if para:
            blocks.append(Block(0, PARAGRAPH, " ".join(para).strip()))
            para.clear()

    def flush_list() -> None:
        if items:
            blocks.append(Block(0, LIST, items=tuple(items)))
            items.clear()

    while i < len(lines):
        line = lines[i]
        stripped = line.strip()
        if not stripped:
            flush_para()
            flush_list()
            i += 1
            continue
        m = re.match(r"^(#{1,6})\s+(.*)$", stripped)
        if m:
            flush_para()
            flush_list()
            blocks.append(Block(0, HEADING, m.group(2).strip(), level=len(m.group(1))))
            i += 1
            continue
        if stripped.startswith("```"):
            flush_para()
            flush_list()
            i += 1
            code: list[str] = []
            while i < len(lines) and not lines[i].strip().startswith("```"):
                code.append(lines[i])
                i += 1
            i += 1
            blocks.append(Block(0, CODE, "\n".join(code)))
            continue
        m = _IMG_RE.match(stripped)
        if m:
            flush_para()
            flush_list()
            blocks.append(Block(0, FIGURE, asset_ref=m.group("ref"),
                                alt=m.group("alt"), caption=m.group("cap") or ""))
            i += 1
            continue
        m = re.match(r"^([-*]|\d+\.)\s+(.*)$", stripped)
        if m:
            flush_para()
            items.append(m.group(2).strip())
            i += 1
            continue
        flush_list()
        para.append(stripped)
        i += 1

    flush_para()
    flush_list()
    return blocks


class _HtmlBlockParser(HTMLParser):
    _HEADINGS = {f"h{n}": n for n in range(1, 7)}

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.blocks: list[Block] = []
        self._stack: list[str] = []
        self._text: list[str] = []
        self._items: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in ("script", "style", "nav"):
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        if tag in self._HEADINGS or tag in ("p", "li", "pre", "figcaption"):
            self._stack.append(tag)
            self._text = []
        elif tag == "img":
            d = dict(attrs)
            self.blocks.append(Block(0, FIGURE, asset_ref=d.get("src", ""),
                                     alt=d.get("alt", ""), caption=d.get("title", "")))

    def handle_endtag(self, tag):
        if tag in ("script", "style", "nav"):
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth or not self._stack or self._stack[-1] != tag:
            if tag in ("ul", "ol") and self._items:
                self.blocks.append(Block(0, LIST, items=tuple(self._items)))
                self._items = []
            return
        self._stack.pop()
        text = re.sub(r"\s+", " ", "".join(self._text)).strip()
        self._text = []
        if not text:
            return
        if tag in self._HEADINGS:
            self.blocks.append(Block(0, HEADING, text, level=self._HEADINGS[tag]))
        elif tag == "p":
            self.blocks.append(Block(0, PARAGRAPH, text))
        elif tag == "li":
            self._items.append(text)
        elif tag == "pre":
            self.blocks.append(Block(0, CODE, text))
        elif tag == "figcaption":
            if self.blocks and self.blocks[-1].kind == FIGURE and not self.blocks[-1].caption:
                self.blocks[-1] = replace(self.blocks[-1], caption=text)

    def handle_data(self, data):
        if self._stack and not self._skip_depth:
            self._text.append(data)


def _parse_html(text: str) -> list[Block]:
    parser = _HtmlBlockParser()
    try:
        parser.feed(text)
        parser.close()
    except Exception as exc:
        raise ParseFailure(f"html parse error: {exc}") from exc
    return parser.blocks


def _parse_plain(text: str) -> list[Block]:
    return [Block(0, PARAGRAPH, re.sub(r"\s+", " ", chunk).strip())
            for chunk in re.split(r"\n\s*\n", text) if chunk.strip()]


def _pick_title(blocks: tuple[Block, ...], name_hint: str | None) -> str:
    for b in blocks:
        if b.kind == HEADING:
            return b.text
    if name_hint:
        stem = re.sub(r"\.[A-Za-z0-9]+$", "", name_hint.rsplit("/", 1)[-1])
        if stem:
            return stem
    return "Untitled"
