"""Corpus BLEU and the throughput measures derived from it.

BLEU here is the corpus-level score: clipped n-gram counts and lengths
are pooled over all sentence pairs before any ratio is taken, then the
geometric mean of the n-gram precisions (n = 1..max_n) is scaled by the
brevity penalty.  Higher-order precisions use add-one smoothing so a
single missing 4-gram does not zero the score of a short corpus.

Semantic throughput treats a transmission as moving 1 - psi units of
meaning per word, where psi = 1 - BLEU, at a spend of E[n] symbols per
word:

    tau = (1 / E[n]) * (1 - psi).

Transmission rate converts a mutual-information estimate in nats per
symbol into bits per second at one symbol per symbol_duration seconds.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

LN2 = math.log(2.0)


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Multiset of n-grams of a token sequence."""
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


@dataclass
class BleuResult:
    score: float
    precisions: tuple[float, ...]
    brevity_penalty: float
    candidate_length: int
    reference_length: int

    def __float__(self) -> float:
        return self.score


def bleu(
    candidates: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    max_n: int = 4,
) -> BleuResult:
    """Corpus BLEU of candidate sentences against one reference each."""
    if len(candidates) != len(references):
        raise ValueError(
            f"got {len(candidates)} candidates but {len(references)} references"
        )
    if not candidates:
        raise ValueError("need at least one sentence pair")
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")

    matched = [0] * max_n
    attempted = [0] * max_n
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            cand_counts = ngram_counts(cand, n)
            if not cand_counts:
                continue
            ref_counts = ngram_counts(ref, n)
            attempted[n - 1] += sum(cand_counts.values())
            matched[n - 1] += sum(
                min(c, ref_counts[g]) for g, c in cand_counts.items()
            )

    precisions = []
    for n in range(1, max_n + 1):
        m, a = matched[n - 1], attempted[n - 1]
        if n >= 2:
            m, a = m + 1, a + 1  # add-one smoothing above unigrams
        precisions.append(m / a if a > 0 else 0.0)

    if cand_len == 0:
        return BleuResult(0.0, tuple(precisions), 0.0, 0, ref_len)
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    if any(p == 0 for p in precisions):
        score = 0.0
    else:
        score = bp * math.exp(sum(math.log(p) for p in precisions) / max_n)
    return BleuResult(
        score=score,
        precisions=tuple(precisions),
        brevity_penalty=bp,
        candidate_length=cand_len,
        reference_length=ref_len,
    )


def bleu_score(
    candidates: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    max_n: int = 4,
) -> float:
    return bleu(candidates, references, max_n=max_n).score


def semantic_error(bleu_value: float) -> float:
    """psi = 1 - BLEU, the per-word share of meaning that failed to arrive."""
    if not 0.0 <= bleu_value <= 1.0:
        raise ValueError(f"BLEU must lie in [0, 1], got {bleu_value}")
    return 1.0 - bleu_value


def semantic_throughput(expected_symbols_per_word: float, psi: float) -> float:
    """tau = (1 / E[n]) * (1 - psi), successfully moved meaning per symbol."""
    if expected_symbols_per_word <= 0:
        raise ValueError("expected symbols per word must be positive")
    if not 0.0 <= psi <= 1.0:
        raise ValueError(f"psi must lie in [0, 1], got {psi}")
    return (1.0 - psi) / expected_symbols_per_word


def transmission_rate(mi_nats_per_symbol: float, symbol_duration: float = 1.0) -> float:
    """Bits per second carried at the estimated mutual information."""
    if symbol_duration <= 0:
        raise ValueError("symbol_duration must be positive")
    return (mi_nats_per_symbol / LN2) / symbol_duration


@dataclass
class MetricsReport:
    """One evaluation point; the derived fields satisfy their identities exactly."""

    snr_db: float
    bleu: float
    bleu_1gram: float
    psi: float
    tau: float
    expected_n: float
    mi_bits: float
    rate_bits_per_s: float

    @classmethod
    def from_bleu(
        cls,
        snr_db: float,
        bleu_value: float,
        bleu_1gram: float,
        expected_symbols_per_word: float,
        mi_nats: float,
        symbol_duration: float = 1.0,
    ) -> "MetricsReport":
        psi = semantic_error(bleu_value)
        return cls(
            snr_db=snr_db,
            bleu=bleu_value,
            bleu_1gram=bleu_1gram,
            psi=psi,
            tau=semantic_throughput(expected_symbols_per_word, psi),
            expected_n=expected_symbols_per_word,
            mi_bits=mi_nats / LN2,
            rate_bits_per_s=transmission_rate(mi_nats, symbol_duration),
        )
