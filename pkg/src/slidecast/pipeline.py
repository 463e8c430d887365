"""End-to-end run orchestration: generate, evaluate, and the run manifest.

Every run owns a directory; each stage persists its artifacts there and the
manifest (written atomically at the end) lists them all, together with stage
timings, gateway call records, and collected warnings.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import assembler, ingest, narrator, outliner, presenteval, slidecomp, speech
from .errors import SlidecastError
from .modelgw import BackendSpec, MockTable, ModelGateway, mock_backends
from .render import RenderConfig, render_slide

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    backends: list[BackendSpec] = field(default_factory=list)
    plan: outliner.PlanConfig = field(default_factory=outliner.PlanConfig)
    ingest_cfg: ingest.IngestConfig = field(default_factory=ingest.IngestConfig)
    rate: narrator.SpeechRateModel = field(default_factory=narrator.SpeechRateModel)
    style: narrator.StyleConfig = field(default_factory=narrator.StyleConfig)
    voice: speech.VoiceConfig = field(default_factory=speech.VoiceConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    output: assembler.OutputConfig = field(default_factory=assembler.OutputConfig)
    transitions: assembler.TransitionConfig = field(default_factory=assembler.TransitionConfig)
    extractor_cmd: list[str] | None = None
    tts_endpoint: str | None = None
    mock_mode: bool = False
    mock_responses: str | None = None     # optional canned-response JSON file
    seed: int = 0
    max_parallel: int = 4


class StageFailure(SlidecastError):
    """Wraps a stage error with its stage tag for the CLI."""

    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class _WarningCollector(logging.Handler):
    def __init__(self) -> None:
        super().__init__(level=logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        self.messages.append(record.getMessage())


def default_mock_table() -> MockTable:
    """Rules that keep judge calls answerable offline; generation stages rely
    on their deterministic fallbacks instead."""
    table = MockTable()
    table.add_rule(r"Respond with the single letter", "A")
    table.add_rule(r"Give a score from 1 to 5", "3 - acceptable quality in mock mode")
    return table


def build_gateway(cfg: RunConfig) -> ModelGateway:
    if cfg.mock_mode:
        table = default_mock_table()
        if cfg.mock_responses:
            for entry in json.loads(Path(cfg.mock_responses).read_text("utf-8")):
                if "prompt" in entry:
                    table.add(entry["prompt"], entry["text"])
                else:
                    table.add_rule(entry["pattern"], entry["text"])
        return ModelGateway(mock_backends(), {"default": table},
                            max_in_flight=cfg.max_parallel)
    return ModelGateway(cfg.backends, max_in_flight=cfg.max_parallel)


def generate(cfg: RunConfig, input_path: str | Path, out_dir: str | Path) -> dict:
    """Full document-to-video run; returns the manifest (also persisted)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    collector = _WarningCollector()
    logging.getLogger("slidecast").addHandler(collector)
    gateway = build_gateway(cfg)
    timings: dict[str, float] = {}
    artifacts: list[str] = []
    try:
        raw_bytes = Path(input_path).read_bytes()
        source = ingest.RawSource(raw_bytes, name_hint=Path(input_path).name)

        with _timed(timings, "ingest"):
            fmt = _stage("ingest", ingest.detect_format, source)
            doc = _stage("ingest", ingest.parse_document, source, fmt, cfg.extractor_cmd)
            doc = _stage("ingest", ingest.normalize_document, doc, cfg.ingest_cfg)

        with _timed(timings, "outline"):
            outline = _stage("outline", outliner.plan_outline, doc, cfg.plan, gateway)
            _write(out_dir / "outline.json", json.dumps(outline.to_dict(), indent=2))
            artifacts.append("outline.json")
            segments = _stage("outline", outliner.segment, doc, outline)

        k = len(segments)
        budgets = narrator.allocate_budgets(
            k, narrator.LengthBounds(*cfg.plan.total_narration_bounds_s))
        library = slidecomp.load_layout_library()
        for sub in ("slides", "narration", "audio"):
            (out_dir / sub).mkdir(exist_ok=True)

        with _timed(timings, "slides"):
            with ThreadPoolExecutor(max_workers=cfg.max_parallel) as pool:
                results = list(pool.map(
                    lambda args: _per_slide(args[0], args[1], cfg, gateway,
                                            library, out_dir),
                    zip(segments, budgets)))
        frames = [r[0] for r in results]
        scripts = [r[1] for r in results]
        tracks = [r[2] for r in results]
        for seg in segments:
            artifacts += [f"slides/slide_{seg.index}.png",
                          f"narration/slide_{seg.index}.txt",
                          f"audio/slide_{seg.index}.wav"]

        transcript = "\n\n".join(s.text for s in scripts) + "\n"
        _write(out_dir / "transcript.txt", transcript)
        artifacts.append("transcript.txt")

        with _timed(timings, "assemble"):
            timeline = _stage("assemble", assembler.build_timeline,
                              frames, tracks, cfg.transitions)
            _write(out_dir / "timeline.json", json.dumps(timeline.to_dict(), indent=2))
            artifacts.append("timeline.json")
            muxer = assembler.default_muxer()
            artifact = _stage("assemble", assembler.compose_video,
                              timeline, cfg.output, muxer, out_dir)
            artifacts.append("video.mp4")
            _write(out_dir / "captions.srt",
                   assembler.emit_captions(timeline, scripts))
            artifacts.append("captions.srt")

        manifest = {
            "input": str(input_path),
            "input_sha256": hashlib.sha256(raw_bytes).hexdigest(),
            "mock_mode": cfg.mock_mode,
            "seed": cfg.seed,
            "slide_count": k,
            "stage_timings_s": timings,
            "gateway_calls": [{"backend": c.backend_name, "mock": c.mock,
                               "attempts": c.attempt_count}
                              for c in gateway.call_log],
            "artifacts": sorted(artifacts + ["manifest.json"]),
            "video": {"path": artifact.path, "width": artifact.width,
                      "height": artifact.height, "fps": artifact.fps,
                      "duration_s": artifact.total_duration_s},
            "warnings": collector.messages,
        }
        _write_atomic(out_dir / "manifest.json", json.dumps(manifest, indent=2))
        return manifest
    finally:
        logging.getLogger("slidecast").removeHandler(collector)


def evaluate(cfg: RunConfig, evidence_dir: str | Path, quiz_path: str | Path,
             out_dir: str | Path) -> dict:
    """PresentEval over an evidence bundle: quiz + all six subjective dimensions."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gateway = build_gateway(cfg)

    evidence = _stage("eval", presenteval.load_evidence, evidence_dir)
    questions = _stage("eval", presenteval.load_quiz_file, quiz_path)
    quiz = _stage("eval", presenteval.run_quiz, evidence, questions, gateway)
    subjective = [_stage("eval", presenteval.score_subjective, evidence, dim, gateway)
                  for dim in presenteval.ALL_DIMENSIONS]

    report = presenteval.build_report(quiz, subjective)
    report["gateway_calls"] = [{"backend": c.backend_name, "mock": c.mock}
                               for c in gateway.call_log]
    _write(out_dir / "report.json", json.dumps(report, indent=2))
    _write(out_dir / "report.txt", presenteval.render_report_table(report))
    from . import report as reporting
    reporting.write_eval_outputs(report, out_dir)
    return report


def bench(cfg: RunConfig, pairs_manifest: str | Path, out_dir: str | Path) -> dict:
    """Generate + evaluate every document/quiz pair; aggregate a suite report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = Path(pairs_manifest)
    spec = json.loads(manifest_path.read_text("utf-8"))
    pairs = spec.get("pairs", [])
    if not pairs:
        raise StageFailure("bench", ValueError("pairs manifest lists no pairs"))

    rows: list[dict] = []
    for i, pair in enumerate(pairs, start=1):
        pair_dir = out_dir / f"pair_{i}"
        row: dict = {"pair": i, "document": pair["document"]}
        try:
            doc_path = _resolve(manifest_path, pair["document"])
            quiz_path = _resolve(manifest_path, pair["quiz"])
            run_manifest = generate(cfg, doc_path, pair_dir / "run")
            evidence = pair.get("evidence")
            evidence_dir = _resolve(manifest_path, evidence) if evidence \
                else pair_dir / "run"
            report = evaluate(cfg, evidence_dir, quiz_path, pair_dir / "eval")
            row.update(status="ok",
                       accuracy=report["quiz"]["accuracy"],
                       correct=report["quiz"]["correct_count"],
                       video_mean=report["video_mean"],
                       audio_mean=report["audio_mean"],
                       slide_count=run_manifest["slide_count"],
                       mock_calls=sum(1 for c in run_manifest["gateway_calls"] if c["mock"])
                                  + sum(1 for c in report["gateway_calls"] if c["mock"]),
                       non_mock_calls=sum(1 for c in run_manifest["gateway_calls"]
                                          if not c["mock"])
                                      + sum(1 for c in report["gateway_calls"]
                                            if not c["mock"]))
        except (SlidecastError, OSError, ValueError, KeyError) as exc:
            logger.warning("pair %d failed: %s", i, exc)
            row.update(status="failed", error=str(exc))
        rows.append(row)

    ok = [r for r in rows if r["status"] == "ok"]
    total_correct = sum(r["correct"] for r in ok)
    total_questions = presenteval.QUESTIONS_PER_DOC * len(ok)
    suite = {
        "pairs": rows,
        "aggregate": {
            "pair_count": len(rows),
            "ok_count": len(ok),
            "accuracy": (total_correct / total_questions) if ok else None,
            "video_mean": presenteval.aggregate_scores(
                [r["video_mean"] for r in ok]) if ok else None,
            "audio_mean": presenteval.aggregate_scores(
                [r["audio_mean"] for r in ok]) if ok else None,
        },
    }
    _write_atomic(out_dir / "suite_report.json", json.dumps(suite, indent=2))
    from . import report as reporting
    reporting.write_suite_outputs(suite, out_dir)
    return suite


def _per_slide(seg, bounds, cfg: RunConfig, gateway, library, out_dir: Path):
    slide_type = slidecomp.classify_slide_type(seg)
    schema = slidecomp.select_layout(slide_type, library)
    ops = _stage("slides", slidecomp.generate_edits, seg, schema, gateway)
    slide_doc = slidecomp.apply_edits(schema, ops)
    frame = _stage("slides", render_slide, slide_doc, cfg.render, seg.index)
    (out_dir / f"slides/slide_{seg.index}.png").write_bytes(frame.png)

    script = _stage("narration", narrator.draft_narration,
                    seg, slide_doc, gateway, cfg.style, cfg.rate)
    script = _stage("narration", narrator.enforce_length,
                    script, bounds, gateway, cfg.rate)
    _write(out_dir / f"narration/slide_{seg.index}.txt", script.text + "\n")

    if cfg.mock_mode or not cfg.tts_endpoint:
        backend = speech.MockTtsBackend(cfg.rate)
    else:
        backend = speech.HttpTtsBackend(cfg.tts_endpoint)
    track = _stage("speech", speech.synthesize, script, backend, cfg.voice)
    with open(out_dir / f"audio/slide_{seg.index}.wav", "wb") as sink:
        speech.write_wav(track, sink)
    return frame, script, track


def _stage(stage: str, fn, *args):
    try:
        return fn(*args)
    except StageFailure:
        raise
    except SlidecastError as exc:
        raise StageFailure(getattr(exc, "stage", stage) or stage, exc) from exc
    except (OSError, ValueError) as exc:
        raise StageFailure(stage, exc) from exc


class _timed:
    def __init__(self, sink: dict, name: str) -> None:
        self.sink, self.name = sink, name

    def __enter__(self):
        self.start = time.perf_counter()

    def __exit__(self, *exc):
        self.sink[self.name] = round(time.perf_counter() - self.start, 4)


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _resolve(manifest_path: Path, ref: str) -> Path:
    path = Path(ref)
    return path if path.is_absolute() else manifest_path.parent / path
