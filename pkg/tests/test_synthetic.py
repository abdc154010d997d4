"""Deterministic synthetic corpora for reconstruction and translation."""

from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from semcom.synthetic import (
    _invent_words,
    copy_direction,
    french_vocab_size,
    make_copy_corpus,
    make_french_english_corpus,
)


class TestInventedWords:
    def test_count_and_uniqueness(self):
        rng = np.random.default_rng(0)
        words = _invent_words(300, rng)
        assert len(words) == 300
        assert len(set(words)) == 300
        assert all(w.isalpha() and w.islower() for w in words)


class TestCopyCorpus:
    def test_pairs_are_exact_copies(self):
        corpus = make_copy_corpus(n_pairs=100, vocab_size=80, seed=0)
        assert len(corpus) == 100
        for src, tgt in corpus.pairs:
            assert src == tgt

    def test_deterministic_by_seed(self):
        a = make_copy_corpus(n_pairs=60, vocab_size=80, seed=5)
        b = make_copy_corpus(n_pairs=60, vocab_size=80, seed=5)
        c = make_copy_corpus(n_pairs=60, vocab_size=80, seed=6)
        assert a.pairs == b.pairs
        assert a.pairs != c.pairs

    def test_sentence_shape(self):
        corpus = make_copy_corpus(n_pairs=200, vocab_size=80, seed=1)
        for src, _ in corpus.pairs:
            assert 4 <= len(src) <= 13  # 3..12 words plus trailing punctuation
            assert src[-1] in {".", "!"}

    def test_vocabulary_is_bounded(self):
        corpus = make_copy_corpus(n_pairs=400, vocab_size=50, seed=2)
        tokens = {tok for src, _ in corpus.pairs for tok in src}
        assert len(tokens) <= 52  # invented words plus . and !

    def test_frequencies_are_heavy_tailed(self):
        corpus = make_copy_corpus(n_pairs=500, vocab_size=100, seed=3)
        counts = Counter(
            tok for src, _ in corpus.pairs for tok in src if tok.isalpha()
        )
        ordered = [c for _, c in counts.most_common()]
        assert ordered[0] >= 4 * ordered[len(ordered) // 2]


class TestFrenchEnglishCorpus:
    def test_sides_are_length_aligned(self):
        corpus = make_french_english_corpus(n_pairs=300, seed=0)
        assert len(corpus) == 300
        for src, tgt in corpus.pairs:
            assert len(src) == len(tgt)

    def test_deterministic_by_seed(self):
        a = make_french_english_corpus(n_pairs=80, seed=4)
        b = make_french_english_corpus(n_pairs=80, seed=4)
        assert a.pairs == b.pairs

    def test_source_vocabulary_fits_six_bits(self):
        assert french_vocab_size() < 64
        corpus = make_french_english_corpus(n_pairs=500, seed=1)
        tokens = {tok for src, _ in corpus.pairs for tok in src}
        assert len(tokens) <= french_vocab_size()

    def test_translation_is_ambiguous_for_some_words(self):
        corpus = make_french_english_corpus(n_pairs=800, seed=2)
        renderings: dict[str, set[str]] = {}
        for src, tgt in corpus.pairs:
            for s_tok, t_tok in zip(src, tgt):
                renderings.setdefault(s_tok, set()).add(t_tok)
        multi = [tok for tok, outs in renderings.items() if len(outs) > 1]
        assert len(multi) >= 5

    def test_not_a_straight_copy(self):
        corpus = make_french_english_corpus(n_pairs=100, seed=3)
        changed = sum(src != tgt for src, tgt in corpus.pairs)
        assert changed > 80


class TestCopyDirection:
    def test_turns_sources_into_targets(self):
        corpus = make_french_english_corpus(n_pairs=50, seed=0)
        same = copy_direction(corpus)
        assert len(same) == len(corpus)
        for src, tgt in same.pairs:
            assert src == tgt
        assert [s for s, _ in same.pairs] == [s for s, _ in corpus.pairs]
