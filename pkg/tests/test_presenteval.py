import random
from pathlib import Path

import pytest

from conftest import FIXTURES, scripted_gateway
from slidecast.errors import (EmptyList, JudgeUnavailable, LengthMismatch,
                              UnparseableScore)
from slidecast.presenteval import (ALL_DIMENSIONS, AUDIO_DIMENSIONS, UNPARSED,
                                   VIDEO_DIMENSIONS, EvidenceBundle, QuizResult,
                                   SubjectiveScore, aggregate_scores, build_report,
                                   load_quiz_file, parse_answer, parse_score,
                                   render_report_table, run_quiz, score_quiz,
                                   score_subjective)

EVIDENCE = EvidenceBundle(slide_images=("slides/slide_1.png",),
                          transcript="A transcript of the narration.")


class TestParseAnswer:
    def test_bare_letter(self):
        assert parse_answer("B") == "B"

    def test_letter_in_sentence(self):
        assert parse_answer("The answer is B.") == "B"

    def test_first_standalone_letter_wins(self):
        assert parse_answer("Between C and D, pick C") == "C"

    def test_lowercase_not_matched(self):
        assert parse_answer("the answer is b") is None

    def test_letter_inside_word_not_matched(self):
        assert parse_answer("CABBAGE") is None

    def test_out_of_range_letter_not_matched(self):
        assert parse_answer("E") is None


class TestParseScore:
    def test_score_and_rationale(self):
        assert parse_score("4 - clear structure") == (4, "clear structure")

    def test_colon_separator(self):
        assert parse_score("5: excellent") == (5, "excellent")

    def test_out_of_range_integer_rejected(self):
        assert parse_score("7/5 amazing") is None

    def test_no_integer_rejected(self):
        assert parse_score("pretty good") is None

    def test_bare_score(self):
        assert parse_score("3") == (3, "")


class TestScoreQuiz:
    def test_all_correct(self):
        assert score_quiz(list("ABCDA"), list("ABCDA")) == (5, 1.0)

    def test_partial(self):
        assert score_quiz(list("ABCDA"), list("ABDDC")) == (3, 0.6)

    def test_unparsed_never_matches(self):
        assert score_quiz([UNPARSED] * 5, list("ABCDA")) == (0, 0.0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            score_quiz(["A"], list("AB"))

    def test_permutation_equivariance(self):
        rng = random.Random(7)
        answers = [rng.choice("ABCD") for _ in range(5)]
        key = [rng.choice("ABCD") for _ in range(5)]
        base = score_quiz(answers, key)
        order = list(range(5))
        rng.shuffle(order)
        assert score_quiz([answers[i] for i in order], [key[i] for i in order]) == base


class TestAggregateScores:
    # frozen reference rows: mean of three unit scores, half-up to 2 decimals
    @pytest.mark.parametrize("values,expected", [
        ([4.0, 4.6, 4.8], 4.47),
        ([4.8, 4.6, 5.0], 4.80),
        ([4.8, 4.6, 4.6], 4.67),
        ([4.2, 4.4, 4.4], 4.33),
    ])
    def test_results_table_rows(self, values, expected):
        assert aggregate_scores(values) == expected

    def test_half_up_rounding(self):
        assert aggregate_scores([4.45]) == 4.45
        assert aggregate_scores([1.0, 1.005]) == 1.0    # 1.0025 rounds down
        assert aggregate_scores([4.125, 4.125]) == 4.13  # exact .125 rounds up

    def test_empty_list_rejected(self):
        with pytest.raises(EmptyList):
            aggregate_scores([])


class TestLoadQuizFile:
    def test_fixture_shape(self):
        questions = load_quiz_file(FIXTURES / "sample_quiz.json")
        assert len(questions) == 5
        for q in questions:
            assert len(q.options) == 4
            assert q.answer_key in "ABCD"
            assert q.stem.strip()

    def test_bad_key_rejected(self, tmp_path):
        bad = tmp_path / "quiz.json"
        bad.write_text('{"questions": [{"stem": "s", "key": "E", '
                       '"options": {"A": "1", "B": "2", "C": "3", "D": "4"}}]}')
        with pytest.raises(ValueError):
            load_quiz_file(bad)


class TestRunQuiz:
    def _questions(self):
        return load_quiz_file(FIXTURES / "sample_quiz.json")

    def test_one_call_per_question(self):
        gw = scripted_gateway(["A", "B", "C", "A", "B"])
        result = run_quiz(EVIDENCE, self._questions(), gw)
        assert result.answers == ("A", "B", "C", "A", "B")
        assert result.correct_count == 5
        assert result.accuracy == 1.0

    def test_unparseable_reply_retried_once_then_unparsed(self):
        gw = scripted_gateway(["??", "??"] + ["A"] * 4)
        result = run_quiz(EVIDENCE, self._questions(), gw)
        assert result.answers[0] == UNPARSED
        assert result.answers[1] == "A"

    def test_gateway_failure_raises_judge_unavailable(self, offline_gateway):
        with pytest.raises(JudgeUnavailable):
            run_quiz(EVIDENCE, self._questions(), offline_gateway)

    def test_wrong_question_count_rejected(self):
        with pytest.raises(ValueError):
            run_quiz(EVIDENCE, self._questions()[:3], scripted_gateway([]))


class TestScoreSubjective:
    def test_parses_score_and_rationale(self):
        gw = scripted_gateway(["4 - well paced narration"])
        score = score_subjective(EVIDENCE, "audio_appeal", gw)
        assert score == SubjectiveScore("audio_appeal", 4, "well paced narration")

    def test_retry_then_success(self):
        gw = scripted_gateway(["no score here", "2: choppy transitions"])
        score = score_subjective(EVIDENCE, "video_visual_appeal", gw)
        assert score.value == 2

    def test_two_unparseable_replies_raise(self):
        gw = scripted_gateway(["??", "??"])
        with pytest.raises(UnparseableScore):
            score_subjective(EVIDENCE, "video_narrative_coherence", gw)

    def test_unknown_dimension_rejected(self):
        with pytest.raises(Exception):
            score_subjective(EVIDENCE, "not_a_dimension", scripted_gateway(["3"]))


class TestBuildReport:
    def _scores(self, values):
        return [SubjectiveScore(d, v, "r") for d, v in zip(ALL_DIMENSIONS, values)]

    def test_means_split_by_channel(self):
        report = build_report(None, self._scores([4, 5, 4, 3, 3, 4]))
        assert report["video_mean"] == aggregate_scores([4, 5, 4])
        assert report["audio_mean"] == aggregate_scores([3, 3, 4])
        assert report["quiz"] is None

    def test_quiz_section(self):
        quiz = QuizResult(answers=("A",) * 5, correct_count=3, accuracy=0.6)
        report = build_report(quiz, self._scores([3] * 6))
        assert report["quiz"]["correct_count"] == 3
        assert report["quiz"]["accuracy"] == 0.6

    def test_table_lists_every_dimension(self):
        quiz = QuizResult(answers=("A",) * 5, correct_count=2, accuracy=0.4)
        table = render_report_table(build_report(quiz, self._scores([1, 2, 3, 4, 5, 1])))
        for dim in ALL_DIMENSIONS:
            assert dim in table
        assert "quiz_accuracy" in table

    def test_dimension_groups_cover_all(self):
        assert set(VIDEO_DIMENSIONS) | set(AUDIO_DIMENSIONS) == set(ALL_DIMENSIONS)
        assert len(ALL_DIMENSIONS) == 6
