"""Command-line entry points: generate, eval, bench.

Exit codes: 0 success, 1 usage error, 2 stage failure, 3 external tool missing.
"""

from __future__ import annotations

import json
import logging
import os
import re
import sys
from pathlib import Path

import click

from . import assembler, ingest, narrator, outliner, pipeline, speech
from .errors import ExtractorUnavailable, MuxerFailure, RasterizerFailure, SlidecastError
from .modelgw import BackendSpec
from .render import RenderConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_STAGE = 2
EXIT_TOOL_MISSING = 3

_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def load_config(path: str | None, mock: bool = False, seed: int | None = None) -> pipeline.RunConfig:
    """Build a RunConfig from a JSON config file plus flag overrides."""
    data = {}
    if path:
        data = _interpolate_env(json.loads(Path(path).read_text("utf-8")))

    cfg = pipeline.RunConfig()
    if "backends" in data:
        cfg.backends = [BackendSpec(
            name=b["name"], kind=b["kind"], endpoint=b["endpoint"],
            context_limit_tokens=int(b["context_limit_tokens"]),
            latency_class=b.get("latency_class", "standard"),
            priority=int(b.get("priority", 10)),
            auth_env=b.get("auth_env")) for b in data["backends"]]
    if "plan" in data:
        p = data["plan"]
        cfg.plan = outliner.PlanConfig(
            slide_budget=tuple(p.get("slide_budget", (5, 10))),
            total_narration_bounds_s=tuple(p.get("total_narration_bounds_s", (30.0, 150.0))),
            chunk_words=int(p.get("chunk_words", 800)))
    if "ingest" in data:
        g = data["ingest"]
        cfg.ingest_cfg = ingest.IngestConfig(
            min_block_words=int(g.get("min_block_words", 8)),
            boilerplate_patterns=tuple(g.get("boilerplate_patterns",
                                             ingest.IngestConfig().boilerplate_patterns)))
    if "narration" in data:
        n = data["narration"]
        cfg.rate = narrator.SpeechRateModel(float(n.get("words_per_minute", 150.0)))
        cfg.style = narrator.StyleConfig(tone=n.get("tone", cfg.style.tone),
                                         language=n.get("language", cfg.style.language))
    if "voice" in data:
        v = data["voice"]
        cfg.voice = speech.VoiceConfig(
            voice_id=v.get("voice_id", "default"),
            language=v.get("language", "en"),
            speaking_rate_multiplier=float(v.get("speaking_rate_multiplier", 1.0)))
    if "render" in data and data["render"].get("rasterizer_cmd"):
        cfg.render = RenderConfig(rasterizer_cmd=tuple(data["render"]["rasterizer_cmd"]))
    if "output" in data:
        o = data["output"]
        cfg.output = assembler.OutputConfig(width=int(o.get("width", 1920)),
                                            height=int(o.get("height", 1080)),
                                            fps=int(o.get("fps", 30)))
    cfg.extractor_cmd = data.get("extractor_cmd")
    cfg.tts_endpoint = data.get("tts_endpoint")
    cfg.mock_responses = data.get("mock_responses")
    cfg.max_parallel = int(data.get("max_parallel", 4))
    cfg.seed = int(data.get("seed", 0))
    if mock or data.get("mock_mode"):
        cfg.mock_mode = True
    if seed is not None:
        cfg.seed = seed
    return cfg


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def cli(verbose: bool) -> None:
    """Turn long-form documents into narrated slide videos, and evaluate them."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Source document (markdown, html, plain, pdf, docx).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Run directory for all artifacts.")
@click.option("--mock", is_flag=True, help="Run fully offline with mock backends.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Random seed recorded in the manifest.")
def generate(input_path: str, out_dir: str, mock: bool, config_path: str | None,
             seed: int | None) -> None:
    """Generate a narrated presentation video from a document."""
    cfg = load_config(config_path, mock=mock, seed=seed)
    manifest = pipeline.generate(cfg, input_path, out_dir)
    click.echo(f"generated {manifest['slide_count']} slides, "
               f"{manifest['video']['duration_s']:.1f} s video -> {out_dir}")


@cli.command()
@click.option("--evidence", "evidence_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Run directory or evidence bundle (slides/ + transcript.txt).")
@click.option("--quiz", "quiz_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Quiz fixture file (5 questions, options A-D, keys).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--mock", is_flag=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def eval(evidence_dir: str, quiz_path: str, out_dir: str, mock: bool,
         config_path: str | None) -> None:
    """Evaluate a generated presentation: quiz accuracy + subjective scores."""
    cfg = load_config(config_path, mock=mock)
    report = pipeline.evaluate(cfg, evidence_dir, quiz_path, out_dir)
    click.echo(f"accuracy {report['quiz']['accuracy']:.2f}, "
               f"video mean {report['video_mean']}, audio mean {report['audio_mean']} "
               f"-> {out_dir}")


@cli.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="JSON file listing document/quiz pairs.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--mock", is_flag=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def bench(manifest_path: str, out_dir: str, mock: bool, config_path: str | None) -> None:
    """Generate and evaluate every pair in a suite manifest."""
    cfg = load_config(config_path, mock=mock)
    suite = pipeline.bench(cfg, manifest_path, out_dir)
    agg = suite["aggregate"]
    click.echo(f"{agg['ok_count']}/{agg['pair_count']} pairs ok, "
               f"aggregate accuracy {agg['accuracy']} -> {out_dir}")


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except pipeline.StageFailure as exc:
        click.echo(f"stage failure: {exc}", err=True)
        if isinstance(exc.cause, (ExtractorUnavailable,)) or _is_tool_missing(exc.cause):
            return EXIT_TOOL_MISSING
        return EXIT_STAGE
    except ExtractorUnavailable as exc:
        click.echo(f"external tool missing: {exc}", err=True)
        return EXIT_TOOL_MISSING
    except SlidecastError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_STAGE


def _is_tool_missing(exc: Exception) -> bool:
    return isinstance(exc, (MuxerFailure, RasterizerFailure)) and "not found" in str(exc)


def _interpolate_env(value):
    if isinstance(value, dict):
        return {k: _interpolate_env(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate_env(v) for v in value]
    if isinstance(value, str):
        return _ENV_RE.sub(lambda m: os.environ.get(m.group(1), ""), value)
    return value


if __name__ == "__main__":
    sys.exit(main())
