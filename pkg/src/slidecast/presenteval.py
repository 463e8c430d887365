"""Presentation evaluation: objective quiz, subjective 1-5 scoring, aggregation.

Quiz questions are authored per document in a fixture file; the harness never
generates its own. The whole-deck quiz and the per-segment subjective scoring
can run against separately configured judge backends.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path

from .errors import (EmptyList, GatewayError, JudgeUnavailable, LengthMismatch,
                     UnparseableScore)
from .modelgw import ModelGateway, load_template, render_prompt

logger = logging.getLogger(__name__)

UNPARSED = "unparsed"
OPTION_LABELS = ("A", "B", "C", "D")
QUESTIONS_PER_DOC = 5

VIDEO_DIMENSIONS = ("video_narrative_coherence", "video_visual_appeal",
                    "video_comprehension_difficulty")
AUDIO_DIMENSIONS = ("audio_narrative_coherence", "audio_appeal",
                    "audio_comprehension_difficulty")
ALL_DIMENSIONS = VIDEO_DIMENSIONS + AUDIO_DIMENSIONS

_ANSWER_RE = re.compile(r"\b([A-D])\b")
_INT_RE = re.compile(r"-?\d+")


@dataclass(frozen=True)
class QuizQuestion:
    stem: str
    options: tuple[str, str, str, str]
    answer_key: str

    def __post_init__(self):
        if self.answer_key not in OPTION_LABELS:
            raise ValueError(f"answer key {self.answer_key!r} not in A-D")


@dataclass(frozen=True)
class QuizResult:
    answers: tuple[str, ...]
    correct_count: int
    accuracy: float


@dataclass(frozen=True)
class EvidenceBundle:
    slide_images: tuple[str, ...]
    transcript: str
    audio_refs: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.slide_images:
            raise ValueError("evidence bundle needs at least one slide image")
        if not self.transcript.strip():
            raise ValueError("evidence bundle needs a non-empty transcript")


@dataclass(frozen=True)
class SubjectiveScore:
    dimension: str
    value: int
    rationale: str

    def __post_init__(self):
        if self.dimension not in ALL_DIMENSIONS:
            raise ValueError(f"unknown dimension {self.dimension!r}")
        if self.value not in (1, 2, 3, 4, 5):
            raise ValueError(f"score {self.value} outside 1-5")


def load_evidence(directory: str | Path) -> EvidenceBundle:
    """Read a pipeline run directory (slides/*.png + transcript.txt) as evidence."""
    directory = Path(directory)
    transcript_path = directory / "transcript.txt"
    if not transcript_path.is_file():
        raise FileNotFoundError(f"missing transcript: {transcript_path}")
    images = sorted((directory / "slides").glob("slide_*.png"),
                    key=lambda p: int(re.search(r"\d+", p.stem).group()))
    audio = sorted((directory / "audio").glob("slide_*.wav"),
                   key=lambda p: int(re.search(r"\d+", p.stem).group()))
    return EvidenceBundle(slide_images=tuple(str(p) for p in images),
                          transcript=transcript_path.read_text("utf-8"),
                          audio_refs=tuple(str(p) for p in audio))


def load_quiz_file(path: str | Path) -> list[QuizQuestion]:
    """Quiz fixture: JSON list of {stem, options: {A..D}, key}."""
    raw = json.loads(Path(path).read_text("utf-8"))
    questions = []
    for entry in raw["questions"]:
        opts = entry["options"]
        questions.append(QuizQuestion(
            stem=entry["stem"],
            options=tuple(opts[label] for label in OPTION_LABELS),
            answer_key=entry["key"]))
    return questions


def run_quiz(evidence: EvidenceBundle, questions: list[QuizQuestion],
             judge: ModelGateway) -> QuizResult:
    """One judge call per question over the full deck evidence."""
    if len(questions) != QUESTIONS_PER_DOC:
        raise ValueError(f"expected {QUESTIONS_PER_DOC} questions, got {len(questions)}")
    template = load_template("quiz_question")
    answers: list[str] = []
    for q in questions:
        prompt = render_prompt(template, {
            "transcript": evidence.transcript,
            "slide_list": "\n".join(evidence.slide_images),
            "stem": q.stem,
            "option_a": q.options[0], "option_b": q.options[1],
            "option_c": q.options[2], "option_d": q.options[3],
        })
        answer = UNPARSED
        for attempt in range(2):    # one retry for unparseable replies
            try:
                reply = judge.ask("quiz", prompt).text
            except GatewayError as exc:
                raise JudgeUnavailable(str(exc)) from exc
            parsed = parse_answer(reply)
            if parsed is not None:
                answer = parsed
                break
            logger.warning("unparseable quiz reply (attempt %d): %r", attempt + 1, reply[:80])
        answers.append(answer)
    correct, accuracy = score_quiz(answers, [q.answer_key for q in questions])
    return QuizResult(answers=tuple(answers), correct_count=correct, accuracy=accuracy)


def parse_answer(reply: str) -> str | None:
    """First standalone capital A-D token, or None."""
    m = _ANSWER_RE.search(reply)
    return m.group(1) if m else None


def score_quiz(answers: list[str], key: list[str]) -> tuple[int, float]:
    if len(answers) != len(key):
        raise LengthMismatch(f"{len(answers)} answers vs {len(key)} keys")
    correct = sum(1 for a, k in zip(answers, key) if a == k and a != UNPARSED)
    return correct, correct / len(key)


def score_subjective(evidence: EvidenceBundle, dimension: str,
                     judge: ModelGateway) -> SubjectiveScore:
    """Render the dimension's scoring prompt and parse '<1-5> <rationale>'."""
    prompt = render_prompt(load_template(dimension), {})
    context = render_prompt(load_template("subjective_context"), {
        "scoring_prompt": prompt,
        "transcript": evidence.transcript,
        "slide_list": "\n".join(evidence.slide_images),
    })
    last_reply = ""
    for attempt in range(2):
        try:
            last_reply = judge.ask("subjective", context).text
        except GatewayError as exc:
            raise JudgeUnavailable(str(exc)) from exc
        parsed = parse_score(last_reply)
        if parsed is not None:
            value, rationale = parsed
            return SubjectiveScore(dimension=dimension, value=value, rationale=rationale)
        logger.warning("unparseable %s score (attempt %d): %r",
                       dimension, attempt + 1, last_reply[:80])
    raise UnparseableScore(f"{dimension}: no integer 1-5 in reply {last_reply[:120]!r}")


def parse_score(reply: str) -> tuple[int, str] | None:
    """First integer in the reply as the score; must be 1-5; remainder = rationale."""
    m = _INT_RE.search(reply)
    if not m:
        return None
    value = int(m.group())
    if value not in (1, 2, 3, 4, 5):
        return None
    rationale = reply[m.end():].lstrip(" \t-—–:./)").strip()
    return value, rationale


def aggregate_scores(values: list[float]) -> float:
    """Arithmetic mean rounded half-up to 2 decimals (exact rational internally)."""
    if not values:
        raise EmptyList("cannot aggregate an empty score list")
    mean = sum(Fraction(str(v)) for v in values) / len(values)
    quotient = Decimal(mean.numerator) / Decimal(mean.denominator)
    return float(quotient.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def build_report(quiz: QuizResult | None,
                 subjective: list[SubjectiveScore]) -> dict:
    """Machine-readable report mirroring the results-table layout."""
    by_dim = {s.dimension: s for s in subjective}
    video = [by_dim[d].value for d in VIDEO_DIMENSIONS if d in by_dim]
    audio = [by_dim[d].value for d in AUDIO_DIMENSIONS if d in by_dim]
    report: dict = {
        "quiz": None,
        "scores": {d: {"value": s.value, "rationale": s.rationale}
                   for d, s in by_dim.items()},
        "video_mean": aggregate_scores(video) if video else None,
        "audio_mean": aggregate_scores(audio) if audio else None,
    }
    if quiz is not None:
        report["quiz"] = {"answers": list(quiz.answers),
                          "correct_count": quiz.correct_count,
                          "accuracy": quiz.accuracy}
    return report


def render_report_table(report: dict) -> str:
    """Plain-text table of the report, one row per metric."""
    lines = [f"{'metric':<36} value", "-" * 44]
    if report.get("quiz"):
        lines.append(f"{'quiz_accuracy':<36} {report['quiz']['accuracy']:.2f}")
        lines.append(f"{'quiz_correct':<36} {report['quiz']['correct_count']}/"
                     f"{QUESTIONS_PER_DOC}")
    for dim in ALL_DIMENSIONS:
        if dim in report.get("scores", {}):
            lines.append(f"{dim:<36} {report['scores'][dim]['value']}")
    for key in ("video_mean", "audio_mean"):
        if report.get(key) is not None:
            lines.append(f"{key:<36} {report[key]:.2f}")
    return "\n".join(lines) + "\n"
