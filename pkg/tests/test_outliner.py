import json
import random

import pytest

from conftest import scripted_gateway
from slidecast.errors import OutlineMismatch
from slidecast.ingest import HEADING, PARAGRAPH, Block, Document
from slidecast.outliner import (Outline, OutlineNode, PlanConfig,
                                fallback_outline, plan_outline, segment)


def make_doc(specs):
    """specs: list of (kind, text[, level]) tuples."""
    blocks = []
    for i, spec in enumerate(specs):
        kind, text = spec[0], spec[1]
        level = spec[2] if len(spec) > 2 else 0
        blocks.append(Block(i, kind, text, level=level))
    blocks = tuple(blocks)
    return Document("d", "Doc", blocks, sum(b.word_count() for b in blocks))


def para(words=20, seedword="w"):
    return (PARAGRAPH, " ".join(f"{seedword}{i}" for i in range(words)))


class TestPlanOutline:
    def test_valid_gateway_payload_used(self, big_doc):
        n = len(big_doc.blocks)
        cuts = [0, n // 6, 2 * n // 6, 3 * n // 6, 4 * n // 6, 5 * n // 6, n]
        payload = {"sections": [{"title": f"Part {i}", "start_block": a, "end_block": b}
                                for i, (a, b) in enumerate(zip(cuts, cuts[1:]))]}
        gw = scripted_gateway([json.dumps(payload)])
        outline = plan_outline(big_doc, PlanConfig(), gw)
        assert len(outline.nodes) == 6
        assert [nd.title for nd in outline.nodes][:2] == ["Part 0", "Part 1"]

    def test_two_bad_payloads_fall_back(self, big_doc):
        gw = scripted_gateway(["not json at all", '{"sections": "nope"}'])
        assert plan_outline(big_doc, PlanConfig(), gw) \
            == fallback_outline(big_doc, PlanConfig())

    def test_gateway_error_falls_back(self, big_doc, offline_gateway):
        assert plan_outline(big_doc, PlanConfig(), offline_gateway) \
            == fallback_outline(big_doc, PlanConfig())

    def test_overbudget_payload_merges_smallest_adjacent_pairs(self):
        doc = make_doc([para(100, f"s{i}") if i not in (3, 4, 8, 9) else para(3, f"s{i}")
                        for i in range(12)])
        payload = {"sections": [{"title": f"S{i}", "start_block": i, "end_block": i + 1}
                                for i in range(12)]}
        gw = scripted_gateway([json.dumps(payload)])
        outline = plan_outline(doc, PlanConfig(slide_budget=(5, 10)), gw)
        assert len(outline.nodes) == 10
        titles = [nd.title for nd in outline.nodes]
        # the two cheapest adjacent pairs (3,4) and (8,9) were merged
        assert "S3" in titles and "S4" not in titles
        assert "S8" in titles and "S9" not in titles

    def test_deterministic_with_same_gateway_script(self, big_doc):
        runs = [plan_outline(big_doc, PlanConfig(),
                             scripted_gateway(["garbage", "garbage"])) for _ in range(2)]
        assert runs[0] == runs[1]


class TestFallbackOutline:
    def test_preamble_plus_three_h2(self):
        doc = make_doc([para(30, "pre"),
                        (HEADING, "A", 2), para(30, "a"),
                        (HEADING, "B", 2), para(30, "b"),
                        (HEADING, "C", 2), para(30, "c")])
        outline = fallback_outline(doc, PlanConfig(slide_budget=(1, 10)))
        assert len(outline.nodes) == 4
        assert outline.nodes[0].start == 0

    def test_headingless_chunking(self):
        doc = make_doc([para(200, f"p{i}") for i in range(12)])  # 2400 words
        outline = fallback_outline(doc, PlanConfig(slide_budget=(1, 10), chunk_words=800))
        assert len(outline.nodes) == 3

    def test_single_heading_spans_everything(self):
        doc = make_doc([(HEADING, "Only", 1), para(50), para(50)])
        outline = fallback_outline(doc, PlanConfig(slide_budget=(1, 10)))
        assert len(outline.nodes) == 1
        assert (outline.nodes[0].start, outline.nodes[0].end) == (0, 3)

    def test_budget_clamp_on_fixture(self, big_doc):
        outline = fallback_outline(big_doc, PlanConfig())
        assert 5 <= len(outline.nodes) <= 10

    def test_splits_at_h3_children_when_below_minimum(self):
        doc = make_doc([(HEADING, "Top", 1), para(40, "a"),
                        (HEADING, "Sub1", 3), para(40, "b"),
                        (HEADING, "Sub2", 3), para(40, "c")])
        outline = fallback_outline(doc, PlanConfig(slide_budget=(2, 10)))
        assert len(outline.nodes) == 2


class TestSegment:
    def test_identity_partition(self, small_doc):
        outline = Outline((OutlineNode("all", 0, len(small_doc.blocks)),))
        segs = segment(small_doc, outline)
        assert len(segs) == 1
        assert segs[0].blocks == small_doc.blocks
        assert segs[0].is_first

    def test_partition_is_exact_disjoint_cover(self, big_doc):
        outline = fallback_outline(big_doc, PlanConfig())
        segs = segment(big_doc, outline)
        covered = [b for s in segs for b in s.blocks]
        assert covered == list(big_doc.blocks)
        indices = [b.index for b in covered]
        assert len(indices) == len(set(indices))

    def test_overlapping_ranges_rejected(self, small_doc):
        outline = Outline((OutlineNode("a", 0, 5), OutlineNode("b", 4, 10)))
        with pytest.raises(OutlineMismatch):
            segment(small_doc, outline)

    def test_gap_rejected(self, small_doc):
        outline = Outline((OutlineNode("a", 0, 3), OutlineNode("b", 5, 10)))
        with pytest.raises(OutlineMismatch):
            segment(small_doc, outline)

    def test_range_past_end_rejected(self, small_doc):
        outline = Outline((OutlineNode("a", 0, 99),))
        with pytest.raises(OutlineMismatch):
            segment(small_doc, outline)

    def test_indices_one_based_and_ordered(self, big_doc):
        segs = segment(big_doc, fallback_outline(big_doc, PlanConfig()))
        assert [s.index for s in segs] == list(range(1, len(segs) + 1))
        assert [s.is_first for s in segs] == [True] + [False] * (len(segs) - 1)


def random_document(rng: random.Random) -> Document:
    n = rng.randint(1, 40)
    specs = []
    for _ in range(n):
        roll = rng.random()
        if roll < 0.25:
            specs.append((HEADING, f"H{rng.randint(0, 999)}", rng.randint(1, 3)))
        else:
            specs.append(para(rng.randint(1, 120), f"r{rng.randint(0, 999)}"))
    return make_doc(specs)


def test_partition_property_100_random_documents():
    rng = random.Random(20260824)
    for _ in range(100):
        doc = random_document(rng)
        segs = segment(doc, fallback_outline(doc, PlanConfig()))
        assert [b for s in segs for b in s.blocks] == list(doc.blocks)
