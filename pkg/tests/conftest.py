import json
from pathlib import Path

import pytest

from slidecast.ingest import (IngestConfig, RawSource, normalize_document,
                              parse_document)
from slidecast.modelgw import BackendSpec, MockTable, ModelGateway

FIXTURES = Path(__file__).resolve().parents[1] / "src/slidecast/data/fixtures"
TEST_DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def small_doc():
    raw = (FIXTURES / "sample_small.md").read_bytes()
    return parse_document(RawSource(raw, "sample_small.md"), "markdown")


@pytest.fixture(scope="session")
def big_doc():
    raw = (FIXTURES / "sample_document.md").read_bytes()
    doc = parse_document(RawSource(raw, "sample_document.md"), "markdown")
    return normalize_document(doc, IngestConfig())


@pytest.fixture()
def offline_gateway():
    """Gateway whose only backends are mocks with an empty table: every ask
    fails deterministically, driving the stages' fallback paths."""
    from slidecast.modelgw import mock_backends
    return ModelGateway(mock_backends(), {"default": MockTable()})


def scripted_gateway(replies):
    """Gateway backed by an injected transport that pops canned replies.

    `replies` entries are strings, or exceptions to raise.
    """
    queue = list(replies)

    def transport(backend, prompt, opts):
        if not queue:
            raise AssertionError("scripted gateway exhausted")
        item = queue.pop(0)
        if isinstance(item, Exception):
            raise item
        return item

    backends = [
        BackendSpec("scripted-llm", "llm", "http://scripted.invalid", 1_000_000, "fast", 1),
        BackendSpec("scripted-vlm", "vlm", "http://scripted.invalid", 1_000_000, "fast", 1),
    ]
    return ModelGateway(backends, transport=transport, sleep=lambda s: None)


@pytest.fixture(scope="session")
def mock_run(tmp_path_factory):
    """One full mock-mode pipeline run over the bundled large fixture."""
    import time

    from slidecast import pipeline
    out = tmp_path_factory.mktemp("run")
    cfg = pipeline.RunConfig(mock_mode=True)
    start = time.monotonic()
    manifest = pipeline.generate(cfg, FIXTURES / "sample_document.md", out)
    elapsed = time.monotonic() - start
    return {"dir": out, "manifest": manifest, "elapsed_s": elapsed}
