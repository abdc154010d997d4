"""Input coercion shared by the estimator-facing entry points."""

from __future__ import annotations

from typing import Sequence

from semcom.corpus import ParallelCorpus, tokenize


def as_pairs(data) -> list[tuple[list[str], list[str]]]:
    """Accept a corpus or a sequence of (source, target) pairs.

    Pair members may be raw strings (tokenized here) or token sequences.
    """
    if isinstance(data, ParallelCorpus):
        pairs = data.pairs
    else:
        pairs = list(data)
    out: list[tuple[list[str], list[str]]] = []
    for i, pair in enumerate(pairs):
        if len(pair) != 2:
            raise ValueError(f"pair {i} does not have exactly two sides")
        src, tgt = pair
        src_tokens = _as_tokens(src, f"pair {i} source")
        tgt_tokens = _as_tokens(tgt, f"pair {i} target")
        out.append((src_tokens, tgt_tokens))
    if not out:
        raise ValueError("no sentence pairs provided")
    return out


def as_sentences(data) -> list[list[str]]:
    """Accept a single sentence or many, as strings or token sequences."""
    if isinstance(data, str):
        data = [data]
    sentences = list(data)
    out = []
    for i, sent in enumerate(sentences):
        out.append(_as_tokens(sent, f"sentence {i}"))
    if not out:
        raise ValueError("no sentences provided")
    return out


def _as_tokens(value, what: str) -> list[str]:
    if isinstance(value, str):
        tokens = tokenize(value)
    else:
        tokens = [str(t) for t in value]
        if any(" " in t or not t for t in tokens):
            raise ValueError(f"{what} contains an empty or space-bearing token")
    if not tokens:
        raise ValueError(f"{what} is empty after tokenization")
    return tokens
