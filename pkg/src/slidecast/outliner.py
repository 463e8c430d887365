"""Hierarchical outline planning and block-range segmentation."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

from .errors import GatewayError, OutlineMismatch
from .ingest import HEADING, Block, Document
from .modelgw import ModelGateway, load_template, render_prompt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OutlineNode:
    title: str
    start: int                       # block range [start, end)
    end: int
    children: tuple["OutlineNode", ...] = ()

    def to_dict(self) -> dict:
        return {"title": self.title, "start_block": self.start, "end_block": self.end,
                "children": [c.to_dict() for c in self.children]}


@dataclass(frozen=True)
class Outline:
    nodes: tuple[OutlineNode, ...]

    def to_dict(self) -> dict:
        return {"sections": [n.to_dict() for n in self.nodes]}


@dataclass(frozen=True)
class ContentSegment:
    index: int                       # 1-based slide number
    title: str
    blocks: tuple[Block, ...]
    is_first: bool = False


@dataclass(frozen=True)
class PlanConfig:
    slide_budget: tuple[int, int] = (5, 10)
    total_narration_bounds_s: tuple[float, float] = (30.0, 150.0)
    chunk_words: int = 800


def plan_outline(doc: Document, cfg: PlanConfig, gateway: ModelGateway) -> Outline:
    """Ask the gateway for a structured outline; fall back after two bad replies."""
    template = load_template("outline")
    prompt = render_prompt(template, {
        "title": doc.title,
        "block_count": str(len(doc.blocks)),
        "blocks": _block_digest(doc),
        "min_sections": str(cfg.slide_budget[0]),
        "max_sections": str(cfg.slide_budget[1]),
    })
    for strike in range(2):
        try:
            completion = gateway.ask("outline", prompt, complexity="high")
        except GatewayError as exc:
            logger.warning("outline gateway call failed (%s); using fallback", exc)
            return fallback_outline(doc, cfg)
        nodes = _parse_outline_payload(completion.text, len(doc.blocks))
        if nodes is not None:
            return _clamp_to_budget(Outline(tuple(nodes)), doc, cfg)
        logger.warning("outline payload invalid (strike %d)", strike + 1)
    return fallback_outline(doc, cfg)


def fallback_outline(doc: Document, cfg: PlanConfig) -> Outline:
    """Deterministic outline: level-1/2 headings open sections, else fixed chunks."""
    boundaries = [b.index for b in doc.blocks if b.kind == HEADING and b.level <= 2]
    n = len(doc.blocks)
    nodes: list[OutlineNode] = []
    if boundaries:
        if boundaries[0] != 0:
            boundaries = [0] + boundaries   # preamble section
        boundaries.append(n)
        for start, end in zip(boundaries, boundaries[1:]):
            if start == end:
                continue
            first = doc.blocks[start]
            title = first.text if first.kind == HEADING else doc.title
            nodes.append(OutlineNode(title, start, end,
                                     children=_child_nodes(doc, start, end)))
    else:
        # no headings: chunk at ~chunk_words per section
        sections = max(1, math.ceil(doc.word_count / cfg.chunk_words))
        per = math.ceil(n / sections)
        for i, start in enumerate(range(0, n, per)):
            end = min(start + per, n)
            nodes.append(OutlineNode(f"{doc.title} ({i + 1})", start, end))
    return _clamp_to_budget(Outline(tuple(nodes)), doc, cfg)


def segment(doc: Document, outline: Outline) -> list[ContentSegment]:
    """Split the document into one ContentSegment per top-level outline node."""
    n = len(doc.blocks)
    expected = 0
    for node in outline.nodes:
        if node.start != expected:
            raise OutlineMismatch(
                f"section {node.title!r} starts at {node.start}, expected {expected}")
        if node.end <= node.start or node.end > n:
            raise OutlineMismatch(f"section {node.title!r} has bad range "
                                  f"[{node.start}, {node.end}) over {n} blocks")
        expected = node.end
    if expected != n:
        raise OutlineMismatch(f"outline covers {expected} of {n} blocks")

    return [ContentSegment(index=k, title=node.title,
                           blocks=doc.blocks[node.start:node.end],
                           is_first=(k == 1))
            for k, node in enumerate(outline.nodes, start=1)]


def _block_digest(doc: Document, max_chars: int = 120) -> str:
    lines = []
    for b in doc.blocks:
        label = b.kind if b.kind != HEADING else f"h{b.level}"
        text = b.text or b.caption or " | ".join(b.items)
        lines.append(f"[{b.index}] {label}: {text[:max_chars]}")
    return "\n".join(lines)


def _parse_outline_payload(text: str, block_count: int) -> list[OutlineNode] | None:
    """Validate a gateway outline reply; None when it cannot be used."""
    payload = _extract_json(text)
    if not isinstance(payload, dict):
        return None
    sections = payload.get("sections")
    if not isinstance(sections, list) or not sections:
        return None
    nodes: list[OutlineNode] = []
    expected = 0
    for sec in sections:
        try:
            title = str(sec["title"]).strip()
            start = int(sec["start_block"])
            end = int(sec["end_block"])
        except (TypeError, KeyError, ValueError):
            return None
        if not title or start != expected or end <= start or end > block_count:
            return None
        nodes.append(OutlineNode(title, start, end))
        expected = end
    if expected != block_count:
        return None
    return nodes


def _extract_json(text: str):
    text = text.strip()
    start = text.find("{")
    end = text.rfind("}")
    if start < 0 or end <= start:
        return None
    try:
        return json.loads(text[start:end + 1])
    except json.JSONDecodeError:
        return None


def _child_nodes(doc: Document, start: int, end: int) -> tuple[OutlineNode, ...]:
    subs = [i for i in range(start + 1, end)
            if doc.blocks[i].kind == HEADING and doc.blocks[i].level == 3]
    if not subs:
        return ()
    bounds = subs + [end]
    children = []
    for s, e in zip(bounds, bounds[1:]):
        children.append(OutlineNode(doc.blocks[s].text, s, e))
    return tuple(children)


def _node_words(doc: Document, node: OutlineNode) -> int:
    return sum(b.word_count() for b in doc.blocks[node.start:node.end])


def _clamp_to_budget(outline: Outline, doc: Document, cfg: PlanConfig) -> Outline:
    lo, hi = cfg.slide_budget
    nodes = list(outline.nodes)

    # too many sections: merge the adjacent pair with the smallest combined
    # word count; ties go to the earlier pair
    while len(nodes) > hi:
        weights = [_node_words(doc, n) for n in nodes]
        i = min(range(len(nodes) - 1), key=lambda i: (weights[i] + weights[i + 1], i))
        a, b = nodes[i], nodes[i + 1]
        nodes[i:i + 2] = [OutlineNode(a.title, a.start, b.end,
                                      children=a.children + b.children)]

    # too few: split the largest section with an interior child boundary
    while len(nodes) < lo:
        candidates = [i for i, n in enumerate(nodes) if _interior_cuts(n)]
        if not candidates:
            break
        i = max(candidates, key=lambda i: (_node_words(doc, nodes[i]), -i))
        node = nodes[i]
        cut = _best_cut(doc, node)
        left = OutlineNode(node.title, node.start, cut,
                           children=tuple(c for c in node.children if c.end <= cut))
        right_children = tuple(c for c in node.children if c.start >= cut)
        right_title = doc.blocks[cut].text if doc.blocks[cut].kind == HEADING \
            else f"{node.title} (cont.)"
        nodes[i:i + 1] = [left, OutlineNode(right_title, cut, node.end,
                                            children=right_children)]

    if len(nodes) < lo and len(doc.blocks) >= lo:
        logger.warning("outline has %d sections, below the %d-slide minimum", len(nodes), lo)
    return Outline(tuple(nodes))


def _interior_cuts(node: OutlineNode) -> list[int]:
    return sorted({c.start for c in node.children if node.start < c.start < node.end})


def _best_cut(doc: Document, node: OutlineNode) -> int:
    """Interior child boundary closest to the section's word-count midpoint."""
    cuts = _interior_cuts(node)
    total = _node_words(doc, node)
    best, best_dist = cuts[0], None
    running = 0
    for i in range(node.start, node.end):
        if i in cuts:
            dist = abs(running - total / 2)
            if best_dist is None or dist < best_dist:
                best, best_dist = i, dist
        running += doc.blocks[i].word_count()
    return best
