"""Corpus BLEU, its frozen fixtures, and the derived throughput metrics."""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import pytest

from semcom.metrics import (
    LN2,
    BleuResult,
    MetricsReport,
    bleu,
    bleu_score,
    ngram_counts,
    semantic_error,
    semantic_throughput,
    transmission_rate,
)

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))
from reference_bleu import build_cases, reference_bleu  # noqa: E402


class TestNgramCounts:
    def test_bigrams(self):
        counts = ngram_counts(["a", "b", "a", "b"], 2)
        assert counts[("a", "b")] == 2
        assert counts[("b", "a")] == 1

    def test_order_longer_than_sentence(self):
        assert not ngram_counts(["a"], 2)


class TestBleuBasics:
    def test_perfect_match(self):
        result = bleu([["the", "cat", "sat", "down"]], [["the", "cat", "sat", "down"]])
        assert result.score == pytest.approx(1.0, abs=1e-12)
        assert result.brevity_penalty == 1.0

    def test_empty_candidate_scores_zero(self):
        assert bleu_score([[]], [["a", "b"]]) == 0.0

    def test_no_unigram_overlap_scores_zero(self):
        assert bleu_score([["x", "y"]], [["a", "b"]]) == 0.0

    def test_brevity_penalty_hand_value(self):
        # candidate 2 tokens vs reference 4: BP = exp(1 - 4/2).
        result = bleu([["a", "b"]], [["a", "b", "c", "d"]], max_n=1)
        assert result.brevity_penalty == pytest.approx(math.exp(-1.0), abs=1e-12)
        assert result.score == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_clipping_limits_repeats(self):
        # "a" appears once in the reference, three times in the candidate.
        result = bleu([["a", "a", "a"]], [["a", "b"]], max_n=1)
        assert result.precisions[0] == pytest.approx(1 / 3)

    def test_smoothing_applies_above_unigrams(self):
        result = bleu([["a", "b"]], [["a", "c"]], max_n=2)
        assert result.precisions[0] == pytest.approx(0.5)  # raw
        assert result.precisions[1] == pytest.approx(0.5)  # (0+1)/(1+1)

    def test_counts_pool_across_sentences(self):
        # 1 of 2 unigrams match in the first pair, 2 of 2 in the second:
        # pooled precision is 3/4, not the mean of per-sentence ratios.
        corpus = bleu(
            [["a", "b"], ["c", "d"]], [["a", "x"], ["c", "d"]], max_n=1
        )
        assert corpus.precisions[0] == pytest.approx(3 / 4)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            bleu([["a"]], [])

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            bleu([], [])

    def test_bad_max_n(self):
        with pytest.raises(ValueError):
            bleu([["a"]], [["a"]], max_n=0)

    def test_returns_result_object(self):
        result = bleu([["a"]], [["a"]])
        assert isinstance(result, BleuResult)
        assert float(result) == result.score


class TestBleuFixtures:
    def test_frozen_cases_replay(self):
        cases = json.loads((HERE / "fixtures" / "bleu_cases.json").read_text())
        assert len(cases) == 20
        for i, case in enumerate(cases):
            ours = bleu_score(
                case["candidates"], case["references"], max_n=case["max_n"]
            )
            assert ours == pytest.approx(case["score"], abs=1e-6), f"case {i}"

    def test_fixture_file_matches_generator(self):
        cases = json.loads((HERE / "fixtures" / "bleu_cases.json").read_text())
        regenerated = build_cases()
        assert len(cases) == len(regenerated)
        for stored, fresh in zip(cases, regenerated):
            assert stored["candidates"] == fresh["candidates"]
            assert stored["score"] == pytest.approx(fresh["score"], abs=1e-12)

    def test_fresh_random_agreement_with_reference(self):
        import random

        rng = random.Random(999)
        vocab = ["r", "s", "t", "u", "v", "w"]
        for _ in range(30):
            refs = [
                [rng.choice(vocab) for _ in range(rng.randint(1, 10))]
                for _ in range(rng.randint(1, 5))
            ]
            cands = [
                [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
                for _ in refs
            ]
            for max_n in (1, 2, 4):
                ours = bleu_score(cands, refs, max_n=max_n)
                theirs = reference_bleu(cands, refs, max_n=max_n)
                assert ours == pytest.approx(theirs, abs=1e-9)

    def test_score_always_in_unit_interval(self):
        import random

        rng = random.Random(31337)
        vocab = ["a", "b", "c"]
        for _ in range(200):
            refs = [[rng.choice(vocab) for _ in range(rng.randint(1, 6))]]
            cands = [[rng.choice(vocab) for _ in range(rng.randint(0, 6))]]
            score = bleu_score(cands, refs)
            assert 0.0 <= score <= 1.0


class TestDerivedMetrics:
    def test_semantic_error_identity(self):
        assert semantic_error(0.8) == pytest.approx(0.2, abs=1e-12)
        with pytest.raises(ValueError):
            semantic_error(1.5)

    def test_throughput_identity(self):
        assert semantic_throughput(4.0, 0.25) == pytest.approx(0.1875, abs=1e-12)
        with pytest.raises(ValueError):
            semantic_throughput(0.0, 0.5)
        with pytest.raises(ValueError):
            semantic_throughput(4.0, 1.5)

    def test_transmission_rate_identity(self):
        assert transmission_rate(LN2, 1.0) == pytest.approx(1.0, abs=1e-12)
        assert transmission_rate(LN2, 0.5) == pytest.approx(2.0, abs=1e-12)
        with pytest.raises(ValueError):
            transmission_rate(1.0, 0.0)

    def test_report_satisfies_identities_exactly(self):
        report = MetricsReport.from_bleu(
            snr_db=7.0,
            bleu_value=0.9,
            bleu_1gram=0.95,
            expected_symbols_per_word=5.0,
            mi_nats=1.2,
            symbol_duration=2.0,
        )
        assert abs(report.psi - (1.0 - report.bleu)) <= 1e-12
        assert abs(report.tau - (1.0 - report.psi) / report.expected_n) <= 1e-12
        assert abs(report.mi_bits - 1.2 / LN2) <= 1e-12
        assert abs(report.rate_bits_per_s - (1.2 / LN2) / 2.0) <= 1e-12
