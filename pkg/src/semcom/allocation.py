"""Symbols-per-word budgets: fixed, or weighted by word length.

The adaptive rule spends a sentence budget of n_max * N symbols in
proportion to character counts,

    n_i = clamp(floor(n_max * N * p_i + 0.5), n_min, n_max),
    p_i = len(w_i) / sum_j len(w_j),

with round-half-up so the worked cases are reproducible exactly.
Punctuation tokens count as the single character they are.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class AllocationPolicy:
    mode: str = "fixed"
    n_fixed: int = 6
    n_min: int = 1
    n_max: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("fixed", "adaptive"):
            raise ValueError(f"mode must be 'fixed' or 'adaptive', got {self.mode!r}")
        if self.n_max is None:
            self.n_max = self.n_fixed
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError(
                f"need 1 <= n_min <= n_max, got n_min={self.n_min} n_max={self.n_max}"
            )
        if self.mode == "fixed" and not self.n_min <= self.n_fixed <= self.n_max:
            raise ValueError(
                f"n_fixed={self.n_fixed} outside [{self.n_min}, {self.n_max}]"
            )


@dataclass
class AllocationResult:
    weights: np.ndarray
    n_symbols: np.ndarray

    @property
    def total(self) -> int:
        return int(self.n_symbols.sum())


def word_weights(sentence: Sequence[str]) -> np.ndarray:
    """Character-count shares p_i, summing to 1."""
    if len(sentence) == 0:
        raise ValueError("cannot weight an empty sentence")
    lengths = np.array([len(tok) for tok in sentence], dtype=np.float64)
    if np.any(lengths <= 0):
        raise ValueError("tokens must be non-empty")
    return lengths / lengths.sum()


def allocate(sentence: Sequence[str], policy: AllocationPolicy) -> AllocationResult:
    """Per-word symbol counts for one sentence under the policy."""
    weights = word_weights(sentence)
    n = len(sentence)
    if policy.mode == "fixed":
        counts = np.full(n, policy.n_fixed, dtype=np.int64)
    else:
        budget = policy.n_max * n
        # floor(x + 0.5) rounds half up, unlike banker's rounding.
        raw = np.floor(budget * weights + 0.5).astype(np.int64)
        counts = np.clip(raw, policy.n_min, policy.n_max)
    return AllocationResult(weights=weights, n_symbols=counts)


def expected_n(sentences: Sequence[Sequence[str]], policy: AllocationPolicy) -> float:
    """Mean symbols per word over all words of a corpus side."""
    total_symbols = 0
    total_words = 0
    for sent in sentences:
        if len(sent) == 0:
            continue
        result = allocate(sent, policy)
        total_symbols += result.total
        total_words += len(sent)
    if total_words == 0:
        raise ValueError("no words to allocate over")
    return total_symbols / total_words


def max_symbols(policy: AllocationPolicy) -> int:
    """Widest per-word allocation the policy can emit; sizes model heads."""
    return int(policy.n_fixed if policy.mode == "fixed" else policy.n_max)
