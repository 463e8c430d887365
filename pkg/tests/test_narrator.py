import random

import pytest

from conftest import scripted_gateway
from slidecast.errors import EmptySegment, InvalidPlan
from slidecast.ingest import LIST, PARAGRAPH, Block
from slidecast.narrator import (LengthBounds, NarrationScript, SpeechRateModel,
                                allocate_budgets, draft_narration, enforce_length,
                                estimate_duration, fallback_narration, strip_markup,
                                truncate_at_sentence)
from slidecast.outliner import ContentSegment
from slidecast.slidecomp import apply_edits, load_layout_library, sentences

RATE = SpeechRateModel(150.0)


def seg(texts, index=2, title="Topic", is_first=False):
    blocks = tuple(Block(i, PARAGRAPH, t) for i, t in enumerate(texts))
    return ContentSegment(index=index, title=title, blocks=blocks, is_first=is_first)


def words(n, stem="w"):
    return " ".join(f"{stem}{i}" for i in range(n))


class TestEstimateDuration:
    def test_300_words_at_150_wpm_is_120s(self):
        assert estimate_duration(words(300), RATE) == 120.0

    def test_empty_text_is_zero(self):
        assert estimate_duration("", RATE) == 0.0

    def test_150_words_at_150_wpm_is_60s(self):
        assert estimate_duration(words(150), RATE) == 60.0

    def test_linearity(self):
        single = estimate_duration(words(40), RATE)
        double = estimate_duration(words(80), RATE)
        assert double == pytest.approx(2 * single)

    def test_accepts_script_objects(self):
        script = NarrationScript(1, words(75), 0.0)
        assert estimate_duration(script, RATE) == 30.0

    def test_rate_bounds_enforced(self):
        with pytest.raises(ValueError):
            SpeechRateModel(60.0)
        with pytest.raises(ValueError):
            SpeechRateModel(300.0)


class TestAllocateBudgets:
    def test_six_slides_split_30_150(self):
        budgets = allocate_budgets(6, LengthBounds(30.0, 150.0))
        assert len(budgets) == 6
        assert budgets[0].min_s == 5.0
        assert budgets[0].max_s == 25.0

    def test_single_slide_gets_the_whole_budget(self):
        budgets = allocate_budgets(1, LengthBounds(30.0, 150.0))
        assert (budgets[0].min_s, budgets[0].max_s) == (30.0, 150.0)

    def test_zero_slides_rejected(self):
        with pytest.raises(InvalidPlan):
            allocate_budgets(0, LengthBounds(30.0, 150.0))


class TestDraftNarration:
    def _slide(self):
        library = load_layout_library()
        return apply_edits(library[0], [])

    def test_empty_segment_rejected(self):
        empty = ContentSegment(index=1, title="x", blocks=(), is_first=True)
        with pytest.raises(EmptySegment):
            draft_narration(empty, self._slide(), scripted_gateway([]))

    def test_gateway_reply_stripped_of_markup(self):
        gw = scripted_gateway(["# Heading\n* bullet one\nplain `code` text"])
        script = draft_narration(seg(["some content here"]), self._slide(), gw)
        for ch in "#*<>`_[]{}|":
            assert ch not in script.text

    def test_gateway_failure_uses_fallback(self, offline_gateway):
        segment = seg(["First sentence of content. Second sentence follows."])
        script = draft_narration(segment, self._slide(), offline_gateway)
        assert script.text == fallback_narration(segment)
        assert script.est_duration_s == estimate_duration(script.text, RATE)

    def test_fallback_opens_with_title(self):
        text = fallback_narration(seg(["Content sentence."], is_first=True, title="Solar"))
        assert text.startswith("Welcome. This presentation covers Solar.")
        text = fallback_narration(seg(["Content sentence."], title="Solar"))
        assert text.startswith("Now let's look at Solar.")

    def test_fallback_speaks_list_items(self):
        blocks = (Block(0, LIST, "", items=("point one", "point two")),)
        segment = ContentSegment(index=2, title="T", blocks=blocks)
        text = fallback_narration(segment)
        assert "point one." in text and "point two." in text


class TestEnforceLength:
    def test_in_range_unchanged(self):
        script = NarrationScript(1, words(25), 10.0)
        out = enforce_length(script, LengthBounds(5.0, 25.0), scripted_gateway([]), RATE)
        assert out.text == script.text

    def test_condense_regeneration_accepted(self):
        script = NarrationScript(1, words(200), 80.0)      # 80 s, too long
        gw = scripted_gateway([words(30)])                 # 12 s, inside [5, 25]
        out = enforce_length(script, LengthBounds(5.0, 25.0), gw, RATE)
        assert out.text == words(30)

    def test_condense_exhausted_then_truncates(self, offline_gateway):
        text = " ".join(f"Sentence number {i} has exactly five words." for i in range(40))
        script = NarrationScript(1, text, 0.0)
        bounds = LengthBounds(5.0, 25.0)
        out = enforce_length(script, bounds, offline_gateway, RATE)
        assert estimate_duration(out, RATE) <= bounds.max_s
        assert out.text == truncate_at_sentence(text, bounds.max_s, RATE)

    def test_expand_exhausted_keeps_short_script(self, offline_gateway, caplog):
        script = NarrationScript(1, "Too short.", 0.0)
        with caplog.at_level("WARNING", logger="slidecast.narrator"):
            out = enforce_length(script, LengthBounds(20.0, 30.0), offline_gateway, RATE)
        assert out.text == "Too short."
        assert any("below" in r.getMessage() for r in caplog.records)


class TestTruncateAtSentence:
    def test_keeps_longest_fitting_prefix(self):
        text = "One two three. Four five six. Seven eight nine."
        # budget of 7 words keeps the first two sentences (6 words)
        out = truncate_at_sentence(text, 7 / RATE.words_per_second, RATE)
        assert out == "One two three. Four five six."

    def test_oversized_first_sentence_word_truncated(self):
        text = words(50) + "."
        out = truncate_at_sentence(text, 10 / RATE.words_per_second, RATE)
        assert out == words(10) + "."
        assert len(out.split()) == 10

    def test_result_always_ends_on_sentence_boundary(self):
        text = "Alpha beta gamma delta. Epsilon zeta."
        out = truncate_at_sentence(text, 4 / RATE.words_per_second, RATE)
        assert out.endswith(".")


def test_strip_markup_removes_structural_characters():
    noisy = "## Title\n- bullet `code` [link]{x} *em* _u_ |cell|"
    clean = strip_markup(noisy)
    for ch in "#*<>`_[]{}|":
        assert ch not in clean
    assert "Title" in clean and "bullet" in clean


def test_length_control_property_50_random_scripts(offline_gateway):
    """With failing regeneration, enforced scripts never exceed max_s and any
    truncation lands on a sentence boundary."""
    rng = random.Random(20260824)
    for _ in range(50):
        n_sents = rng.randint(1, 30)
        text = " ".join(
            " ".join(f"s{rng.randint(0, 99)}" for _ in range(rng.randint(2, 18))) + "."
            for _ in range(n_sents))
        lo = rng.uniform(1.0, 20.0)
        hi = lo + rng.uniform(2.0, 40.0)
        script = NarrationScript(1, text, 0.0)
        out = enforce_length(script, LengthBounds(lo, hi), offline_gateway, RATE)
        assert estimate_duration(out, RATE) <= hi
        if out.text != text:
            assert out.text.endswith((".", "!", "?"))
            assert sentences(out.text)
