import json
from pathlib import Path

import pytest

from conftest import FIXTURES
from slidecast.cli import (EXIT_OK, EXIT_STAGE, EXIT_TOOL_MISSING, EXIT_USAGE,
                           load_config, main)

SMALL = str(FIXTURES / "sample_small.md")
QUIZ = str(FIXTURES / "sample_quiz.json")


class TestExitCodes:
    def test_missing_required_option_is_usage_error(self, tmp_path):
        assert main(["generate", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_unknown_command_is_usage_error(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_empty_input_is_stage_failure(self, tmp_path, capsys):
        empty = tmp_path / "empty.md"
        empty.write_bytes(b"")
        code = main(["generate", "--input", str(empty),
                     "--out", str(tmp_path / "out"), "--mock"])
        assert code == EXIT_STAGE
        assert "stage failure" in capsys.readouterr().err

    def test_pdf_without_extractor_is_tool_missing(self, tmp_path):
        pdf = tmp_path / "doc.pdf"
        pdf.write_bytes(b"%PDF-1.7 minimal")
        code = main(["generate", "--input", str(pdf),
                     "--out", str(tmp_path / "out"), "--mock"])
        assert code == EXIT_TOOL_MISSING

    def test_successful_mock_generate(self, tmp_path, capsys):
        code = main(["generate", "--input", SMALL,
                     "--out", str(tmp_path / "run"), "--mock"])
        assert code == EXIT_OK
        assert "slides" in capsys.readouterr().out


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-run")
    assert main(["generate", "--input", SMALL, "--out", str(out),
                 "--mock", "--seed", "11"]) == EXIT_OK
    return out


class TestGenerateArtifacts:

    def test_manifest_lists_existing_artifacts(self, run):
        manifest = json.loads((run / "manifest.json").read_text())
        for rel in manifest["artifacts"]:
            assert (run / rel).is_file(), rel

    def test_manifest_records_flags(self, run):
        manifest = json.loads((run / "manifest.json").read_text())
        assert manifest["mock_mode"] is True
        assert manifest["seed"] == 11
        assert manifest["input_sha256"]

    def test_mock_runs_are_byte_deterministic(self, run, tmp_path):
        other = tmp_path / "again"
        assert main(["generate", "--input", SMALL, "--out", str(other),
                     "--mock", "--seed", "11"]) == EXIT_OK
        for rel in ("transcript.txt", "timeline.json", "outline.json", "captions.srt"):
            assert (other / rel).read_bytes() == (run / rel).read_bytes(), rel
        slide_pngs = sorted(p.name for p in (run / "slides").iterdir())
        for name in slide_pngs:
            assert (other / "slides" / name).read_bytes() \
                == (run / "slides" / name).read_bytes()

    def test_eval_over_generated_run(self, run, tmp_path, capsys):
        out = tmp_path / "eval"
        assert main(["eval", "--evidence", str(run), "--quiz", QUIZ,
                     "--out", str(out), "--mock"]) == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert set(report["scores"]) == {
            "video_narrative_coherence", "video_visual_appeal",
            "video_comprehension_difficulty", "audio_narrative_coherence",
            "audio_appeal", "audio_comprehension_difficulty"}
        assert (out / "report.csv").is_file()
        assert (out / "figures" / "scores.png").is_file()


class TestLoadConfig:
    def test_defaults_without_file(self):
        cfg = load_config(None)
        assert cfg.plan.slide_budget == (5, 10)
        assert cfg.output.fps == 30
        assert not cfg.mock_mode

    def test_file_values_and_env_interpolation(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TTS_HOST", "tts.example")
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({
            "plan": {"slide_budget": [4, 8]},
            "narration": {"words_per_minute": 170},
            "tts_endpoint": "http://${TTS_HOST}/v1",
            "backends": [{"name": "b1", "kind": "llm",
                          "endpoint": "http://b1", "context_limit_tokens": 9000}],
        }))
        cfg = load_config(str(cfg_file))
        assert cfg.plan.slide_budget == (4, 8)
        assert cfg.rate.words_per_minute == 170
        assert cfg.tts_endpoint == "http://tts.example/v1"
        assert cfg.backends[0].context_limit_tokens == 9000

    def test_mock_flag_overrides_file(self, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text("{}")
        assert load_config(str(cfg_file), mock=True).mock_mode
