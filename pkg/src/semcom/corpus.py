"""Parallel text corpora: tokenization, vocabularies, unigram statistics.

Corpora are tab-separated files with one sentence pair per line
(``source<TAB>target``, any further fields ignored).  Tokenization is
deliberately simple and reversible: lowercase, whitespace split, and
common punctuation detached as single-character tokens.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
START_TOKEN = "<start>"
END_TOKEN = "<end>"
UNK_TOKEN = "<unk>"
SPECIAL_TOKENS = (PAD_TOKEN, START_TOKEN, END_TOKEN, UNK_TOKEN)

_DETACHED_PUNCTUATION = ".,!?;:'\""

# Tilt exponents beyond this produce degenerate resampling weights.
_MAX_TILT = 32.0


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, and detach punctuation.

    Each character in ``.,!?;:'"`` becomes its own token regardless of
    position, so ``tokenize("Va !")`` gives ``["va", "!"]`` and
    ``tokenize("Go.")`` gives ``["go", "."]``.
    """
    text = text.lower()
    for ch in _DETACHED_PUNCTUATION:
        if ch in text:
            text = text.replace(ch, f" {ch} ")
    return text.split()


def detokenize(tokens: Sequence[str]) -> str:
    """Inverse presentation of :func:`tokenize`; round-trips token lists."""
    return " ".join(tokens)


@dataclass
class ParallelCorpus:
    """Tokenized sentence pairs plus bookkeeping from loading."""

    pairs: list[tuple[list[str], list[str]]]
    name: str = ""
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple[list[str], list[str]]]:
        return iter(self.pairs)

    def sources(self) -> list[list[str]]:
        return [src for src, _ in self.pairs]

    def targets(self) -> list[list[str]]:
        return [tgt for _, tgt in self.pairs]


def load_corpus(
    path: str | Path,
    max_pairs: int | None = None,
    max_len: int = 16,
) -> ParallelCorpus:
    """Read a tab-separated parallel file into a :class:`ParallelCorpus`.

    Lines without a tab are counted and skipped with a warning; pairs in
    which either side tokenizes to nothing are treated the same way.
    Pairs longer than ``max_len`` tokens on either side are dropped
    silently.  At most ``max_pairs`` surviving pairs are returned.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"corpus file not found: {path}")
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")

    pairs: list[tuple[list[str], list[str]]] = []
    skipped = 0
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                skipped += 1
                continue
            src = tokenize(fields[0])
            tgt = tokenize(fields[1])
            if not src or not tgt:
                skipped += 1
                continue
            if len(src) > max_len or len(tgt) > max_len:
                continue
            pairs.append((src, tgt))
            if max_pairs is not None and len(pairs) >= max_pairs:
                break
    if skipped:
        logger.warning("%s: skipped %d malformed line(s)", path.name, skipped)
    return ParallelCorpus(pairs=pairs, name=path.stem, skipped=skipped)


def save_corpus(corpus: ParallelCorpus, path: str | Path) -> None:
    """Write pairs back out in the tab-separated format ``load_corpus`` reads."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for src, tgt in corpus.pairs:
            fh.write(f"{detokenize(src)}\t{detokenize(tgt)}\n")


class Vocab:
    """Token-index mapping with four reserved entries at the front.

    Indices 0..3 are ``<pad>``, ``<start>``, ``<end>``, ``<unk>``.
    Remaining tokens are ordered by descending corpus frequency, ties
    broken lexicographically, which makes construction deterministic.
    """

    def __init__(self, tokens: Sequence[str], side: str, freqs: dict[str, int] | None = None):
        if list(tokens[:4]) != list(SPECIAL_TOKENS):
            raise ValueError("vocabulary must start with the four reserved tokens")
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary tokens must be unique")
        self.tokens = list(tokens)
        self.side = side
        self.freqs = dict(freqs) if freqs is not None else {}
        self._index = {tok: i for i, tok in enumerate(self.tokens)}

    pad_index = 0
    start_index = 1
    end_index = 2
    unk_index = 3

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def encode(self, token: str) -> int:
        return self._index.get(token, self.unk_index)

    def encode_tokens(self, tokens: Sequence[str]) -> list[int]:
        return [self.encode(t) for t in tokens]

    def decode(self, index: int) -> str:
        if not 0 <= index < len(self.tokens):
            raise ValueError(f"index {index} outside vocabulary of size {len(self.tokens)}")
        return self.tokens[index]

    def decode_indices(self, indices: Sequence[int]) -> list[str]:
        return [self.decode(i) for i in indices]

    @property
    def content_tokens(self) -> list[str]:
        return self.tokens[len(SPECIAL_TOKENS):]

    def content_hash(self) -> str:
        payload = (self.side + "\x00" + "\x00".join(self.tokens)).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def save(self, path: str | Path) -> None:
        """Dump as ``index<TAB>token<TAB>frequency`` lines."""
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            for i, tok in enumerate(self.tokens):
                fh.write(f"{i}\t{tok}\t{self.freqs.get(tok, 0)}\n")

    @classmethod
    def load(cls, path: str | Path, side: str = "source") -> "Vocab":
        path = Path(path)
        tokens: list[str] = []
        freqs: dict[str, int] = {}
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                index_s, token, freq_s = line.split("\t")
                if int(index_s) != len(tokens):
                    raise ValueError(f"non-contiguous index in vocabulary dump: {line!r}")
                tokens.append(token)
                freqs[token] = int(freq_s)
        return cls(tokens, side=side, freqs=freqs)


def build_vocab(corpus: ParallelCorpus, side: str = "source", min_freq: int = 1) -> Vocab:
    """Count one side of the corpus and build its :class:`Vocab`."""
    if side not in ("source", "target"):
        raise ValueError(f"side must be 'source' or 'target', got {side!r}")
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    sentences = corpus.sources() if side == "source" else corpus.targets()
    counts: Counter[str] = Counter()
    for sent in sentences:
        counts.update(sent)
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_freq and tok not in SPECIAL_TOKENS),
        key=lambda tok: (-counts[tok], tok),
    )
    freqs = {tok: counts[tok] for tok in kept}
    return Vocab(list(SPECIAL_TOKENS) + kept, side=side, freqs=freqs)


@dataclass
class SourceDistribution:
    """Empirical unigram distribution over a vocabulary, probabilities summing to 1."""

    tokens: list[str]
    probs: np.ndarray
    entropy_bits: float = field(default=0.0)

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.shape != (len(self.tokens),):
            raise ValueError("probs must align with tokens")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(self.probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {self.probs.sum()!r}, expected 1")
        self.entropy_bits = float(unigram_entropy_bits(self.probs))

    def prob(self, token: str) -> float:
        try:
            return float(self.probs[self.tokens.index(token)])
        except ValueError:
            return 0.0


def unigram_entropy_bits(probs: np.ndarray) -> float:
    """Shannon entropy in bits with the 0 log 0 = 0 convention."""
    p = np.asarray(probs, dtype=np.float64)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def source_distribution(corpus: ParallelCorpus, vocab: Vocab) -> SourceDistribution:
    """Empirical token distribution of the corpus side the vocab was built from.

    Out-of-vocabulary tokens are aggregated onto ``<unk>``.
    """
    sentences = corpus.sources() if vocab.side == "source" else corpus.targets()
    counts = np.zeros(len(vocab), dtype=np.float64)
    for sent in sentences:
        for tok in sent:
            counts[vocab.encode(tok)] += 1
    total = counts.sum()
    if total == 0:
        raise ValueError("cannot take a token distribution of an empty corpus")
    return SourceDistribution(tokens=list(vocab.tokens), probs=counts / total)


def _side_entropy_bits(sentences: Sequence[Sequence[str]]) -> float:
    counts = Counter(tok for sent in sentences for tok in sent)
    total = sum(counts.values())
    probs = np.array([c / total for c in counts.values()], dtype=np.float64)
    return unigram_entropy_bits(probs)


def corpus_entropy_bits(corpus: ParallelCorpus) -> float:
    """Unigram entropy of the source side, independent of any vocabulary."""
    return _side_entropy_bits(corpus.sources())


def _tilted_entropy(
    theta: float,
    scores: np.ndarray,
    count_matrix: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Entropy of the expected unigram distribution under exp(theta * score) weights."""
    logits = theta * scores
    logits -= logits.max()
    weights = np.exp(logits)
    weights /= weights.sum()
    mixed = weights @ count_matrix
    mixed /= mixed.sum()
    return unigram_entropy_bits(mixed), weights


def reweight_entropy(
    corpus: ParallelCorpus,
    target_entropy_bits: float,
    tol: float = 0.05,
    rng_seed: int = 0,
) -> ParallelCorpus:
    """Resample the corpus so its source unigram entropy hits a target.

    Sentences are drawn with replacement, weighted by exp(theta * s) where
    s is the sentence log-probability under the current unigram model.
    Positive theta favors common words and lowers entropy, but extreme
    tilts of either sign concentrate all weight on one sentence, so the
    entropy curve is not monotone in theta.  The exponent is therefore
    located on a theta grid first and refined by bisection inside the
    bracketing segment.  A target outside the achievable range raises a
    ``ValueError`` that states the range.
    """
    if not corpus.pairs:
        raise ValueError("cannot reweight an empty corpus")

    sources = corpus.sources()
    token_list = sorted({tok for sent in sources for tok in sent})
    token_index = {tok: i for i, tok in enumerate(token_list)}
    count_matrix = np.zeros((len(sources), len(token_list)), dtype=np.float64)
    for j, sent in enumerate(sources):
        for tok in sent:
            count_matrix[j, token_index[tok]] += 1
    base_probs = count_matrix.sum(axis=0)
    base_probs /= base_probs.sum()
    # Sentence score: total log-likelihood under the base unigram model.
    scores = count_matrix @ np.log(base_probs)

    thetas = np.linspace(-_MAX_TILT, _MAX_TILT, 257)
    curve = np.array([_tilted_entropy(t, scores, count_matrix)[0] for t in thetas])
    low_entropy, high_entropy = float(curve.min()), float(curve.max())
    if not (low_entropy - tol <= target_entropy_bits <= high_entropy + tol):
        raise ValueError(
            "target entropy %.4f bits is outside the achievable range "
            "[%.4f, %.4f] bits for this corpus"
            % (target_entropy_bits, low_entropy, high_entropy)
        )

    nearest = int(np.argmin(np.abs(curve - target_entropy_bits)))
    theta = float(thetas[nearest])
    for a, b in ((nearest - 1, nearest), (nearest, nearest + 1)):
        if a < 0 or b >= len(thetas):
            continue
        g_a = curve[a] - target_entropy_bits
        g_b = curve[b] - target_entropy_bits
        if g_a * g_b > 0:
            continue
        t_a, t_b = float(thetas[a]), float(thetas[b])
        for _ in range(60):
            mid = 0.5 * (t_a + t_b)
            g_mid = _tilted_entropy(mid, scores, count_matrix)[0] - target_entropy_bits
            if g_a * g_mid > 0:
                t_a, g_a = mid, g_mid
            else:
                t_b = mid
        theta = 0.5 * (t_a + t_b)
        break
    _, weights = _tilted_entropy(theta, scores, count_matrix)

    rng = np.random.default_rng(rng_seed)
    achieved = math.inf
    resampled: list[tuple[list[str], list[str]]] = []
    # A finite resample adds noise around the tilted expectation; redraw a
    # few times rather than silently returning an out-of-tolerance corpus.
    for _ in range(16):
        chosen = rng.choice(len(corpus.pairs), size=len(corpus.pairs), p=weights)
        resampled = [
            (list(corpus.pairs[j][0]), list(corpus.pairs[j][1])) for j in chosen
        ]
        achieved = _side_entropy_bits([src for src, _ in resampled])
        if abs(achieved - target_entropy_bits) <= tol:
            return ParallelCorpus(
                pairs=resampled,
                name=f"{corpus.name}@H{target_entropy_bits:.2f}" if corpus.name else "",
            )
    raise ValueError(
        "resampling reached entropy %.4f bits, outside tolerance %.3f of target %.4f"
        % (achieved, tol, target_entropy_bits)
    )
