"""Per-slide narration drafting and duration control.

Durations are estimated with a words-per-minute model; scripts outside their
budget are regenerated through the gateway (up to twice per direction) and
finally truncated at a sentence boundary.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .errors import EmptySegment, GatewayError, InvalidPlan
from .ingest import FIGURE, HEADING, LIST
from .modelgw import ModelGateway, load_template, render_prompt
from .outliner import ContentSegment
from .slidecomp import SlideDoc, sentences

logger = logging.getLogger(__name__)

_MARKUP_CHARS = re.compile(r"[#*<>`_\[\]{}|]")
_BULLET_PREFIX = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s+", re.MULTILINE)

SPOKEN_CONNECTORS = ("Let's start with", "Next,", "Moving on,", "In addition,",
                     "Furthermore,", "Finally,")


@dataclass(frozen=True)
class SpeechRateModel:
    words_per_minute: float = 150.0

    def __post_init__(self):
        if not 80.0 <= self.words_per_minute <= 260.0:
            raise ValueError(f"words_per_minute {self.words_per_minute} outside [80, 260]")

    @property
    def words_per_second(self) -> float:
        return self.words_per_minute / 60.0


@dataclass(frozen=True)
class LengthBounds:
    min_s: float
    max_s: float

    def __post_init__(self):
        if not (0 < self.min_s < self.max_s):
            raise ValueError(f"bad bounds [{self.min_s}, {self.max_s}]")


@dataclass(frozen=True)
class NarrationScript:
    slide_index: int
    text: str
    est_duration_s: float


@dataclass(frozen=True)
class StyleConfig:
    tone: str = "clear and engaging"
    language: str = "en"


def draft_narration(segment: ContentSegment, slide: SlideDoc,
                    gateway: ModelGateway, style: StyleConfig | None = None,
                    rate: SpeechRateModel | None = None) -> NarrationScript:
    """Oral-style script for one slide; deterministic fallback on gateway failure."""
    if not segment.blocks:
        raise EmptySegment(f"segment {segment.index} has no blocks")
    style = style or StyleConfig()
    rate = rate or SpeechRateModel()

    prompt = render_prompt(load_template("narration"), {
        "segment_title": segment.title,
        "segment_text": _spoken_source(segment),
        "tone": style.tone,
        "language": style.language,
    })
    try:
        text = gateway.ask("narration", prompt).text
    except GatewayError as exc:
        logger.warning("narration gateway call failed for slide %d (%s); using fallback",
                       segment.index, exc)
        text = fallback_narration(segment)
    text = strip_markup(text)
    return _script(segment.index, text, rate)


def fallback_narration(segment: ContentSegment) -> str:
    """Concatenates segment sentences with spoken connectors."""
    pieces: list[str] = []
    if segment.is_first:
        pieces.append(f"Welcome. This presentation covers {segment.title}.")
    else:
        pieces.append(f"Now let's look at {segment.title}.")
    conn = 0
    for block in segment.blocks:
        if block.kind == HEADING:
            continue
        if block.kind == LIST:
            for item in block.items:
                pieces.append(_as_sentence(item))
            continue
        if block.kind == FIGURE:
            if block.caption or block.alt:
                pieces.append(f"Here we can see {_as_sentence(block.caption or block.alt, lower=True)}")
            continue
        for i, sent in enumerate(sentences(block.text)):
            if i == 0 and conn < len(SPOKEN_CONNECTORS):
                pieces.append(f"{SPOKEN_CONNECTORS[conn]} {sent[0].lower() + sent[1:]}"
                              if sent else "")
                conn += 1
            else:
                pieces.append(sent)
    return strip_markup(" ".join(p for p in pieces if p))


def estimate_duration(script: NarrationScript | str, rate: SpeechRateModel) -> float:
    text = script.text if isinstance(script, NarrationScript) else script
    return len(text.split()) / rate.words_per_second


def allocate_budgets(k: int, total: LengthBounds) -> list[LengthBounds]:
    if k < 1:
        raise InvalidPlan(f"cannot allocate narration budgets for K={k}")
    per = LengthBounds(total.min_s / k, total.max_s / k)
    return [per] * k


def enforce_length(script: NarrationScript, bounds: LengthBounds,
                   gateway: ModelGateway,
                   rate: SpeechRateModel | None = None) -> NarrationScript:
    """Bring a script inside its duration bounds.

    Too long: up to 2 condense regenerations, then sentence-boundary truncation.
    Too short: up to 2 expand regenerations, then accepted with a warning.
    """
    rate = rate or SpeechRateModel()
    est = estimate_duration(script, rate)
    if bounds.min_s <= est <= bounds.max_s:
        return _script(script.slide_index, script.text, rate)

    direction = "condense" if est > bounds.max_s else "expand"
    target_words = int(((bounds.min_s + bounds.max_s) / 2) * rate.words_per_second)
    current = script
    for _ in range(2):
        prompt = render_prompt(load_template(f"narration_{direction}"), {
            "text": current.text,
            "target_words": str(target_words),
        })
        try:
            candidate = strip_markup(gateway.ask("narration", prompt).text)
        except GatewayError as exc:
            logger.warning("%s regeneration failed for slide %d: %s",
                           direction, script.slide_index, exc)
            continue
        est = estimate_duration(candidate, rate)
        if bounds.min_s <= est <= bounds.max_s:
            return _script(script.slide_index, candidate, rate)
        if direction == "condense" and est < estimate_duration(current, rate):
            current = _script(script.slide_index, candidate, rate)

    if direction == "condense":
        truncated = truncate_at_sentence(current.text, bounds.max_s, rate)
        logger.warning("slide %d narration truncated to fit %.1f s",
                       script.slide_index, bounds.max_s)
        return _script(script.slide_index, truncated, rate)

    logger.warning("slide %d narration stays below the %.1f s minimum",
                   script.slide_index, bounds.min_s)
    return _script(script.slide_index, current.text, rate)


def truncate_at_sentence(text: str, max_s: float, rate: SpeechRateModel) -> str:
    """Longest sentence prefix whose estimate fits max_s.

    If not even the first sentence fits, it is cut at a word boundary and
    closed with a period so the result still ends on a sentence boundary.
    """
    budget = int(max_s * rate.words_per_second)
    kept: list[str] = []
    used = 0
    for sent in sentences(text):
        n = len(sent.split())
        if used + n > budget:
            break
        kept.append(sent)
        used += n
    if not kept:
        first = sentences(text)
        words = (first[0] if first else text).split()[:max(budget, 0)]
        return (" ".join(words).rstrip(".,;:!?") + ".") if words else ""
    return " ".join(kept)


def strip_markup(text: str) -> str:
    text = _BULLET_PREFIX.sub("", text)
    text = _MARKUP_CHARS.sub("", text)
    return re.sub(r"\s+", " ", text).strip()


def _spoken_source(segment: ContentSegment, max_chars: int = 4000) -> str:
    parts = []
    for b in segment.blocks:
        if b.kind == LIST:
            parts.extend(b.items)
        elif b.kind == FIGURE:
            if b.caption or b.alt:
                parts.append(b.caption or b.alt)
        else:
            parts.append(b.text)
    return "\n".join(parts)[:max_chars]


def _as_sentence(text: str, lower: bool = False) -> str:
    text = text.strip()
    if not text:
        return ""
    if lower:
        text = text[0].lower() + text[1:]
    if text[-1] not in ".!?":
        text += "."
    return text


def _script(index: int, text: str, rate: SpeechRateModel) -> NarrationScript:
    return NarrationScript(slide_index=index, text=text,
                           est_duration_s=estimate_duration(text, rate))
