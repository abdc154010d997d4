"""Classical reference chain: source coding, 64-QAM, and word lookup.

The chain is Huffman (or 6-bit fixed-width) coding of tokens, Gray-mapped
64-QAM modulation, the channel, zero-forcing equalization, nearest-point
demodulation, and prefix decoding.  A bit error inside a Huffman stream
desynchronizes everything after it, which is the behavior that makes the
baseline collapse at low SNR; decoding therefore stops at the first
invalid codeword and pads the remainder of the sentence with ``<unk>``.

Translation is a static dictionary built from co-occurrence counts, one
target word per source word, standing in for an external phrase-based
translator.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from semcom.channel import ChannelConfig, DeepFadeError, apply as channel_apply, zf_equalize
from semcom.corpus import ParallelCorpus, SourceDistribution, UNK_TOKEN

# Tokens carrying no probability mass still need codewords; this weight
# pushes them to the bottom of the tree without disturbing the rest.
_ZERO_PROB_WEIGHT = 1e-12


@dataclass
class HuffmanCode:
    """Prefix-free binary code over a token alphabet."""

    codewords: dict[str, str]

    def __post_init__(self) -> None:
        self._tree = _prefix_tree(self.codewords)

    def kraft_sum(self) -> float:
        return sum(2.0 ** -len(w) for w in self.codewords.values())

    def mean_length(self, dist: SourceDistribution) -> float:
        return sum(
            p * len(self.codewords[tok])
            for tok, p in zip(dist.tokens, dist.probs)
            if p > 0
        )

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        bits: list[int] = []
        for tok in tokens:
            word = self.codewords.get(tok) or self.codewords[UNK_TOKEN]
            bits.extend(1 if b == "1" else 0 for b in word)
        return np.array(bits, dtype=np.uint8)

    def decode(self, bits: np.ndarray, n_tokens: int) -> list[str]:
        """Prefix-walk the bit stream; stop at the first invalid codeword."""
        out: list[str] = []
        node = self._tree
        for b in bits:
            node = node.get(int(b))
            if node is None:
                break  # desynchronized, the rest of the stream is garbage
            if isinstance(node, str):
                out.append(node)
                node = self._tree
                if len(out) == n_tokens:
                    break
        out.extend([UNK_TOKEN] * (n_tokens - len(out)))
        return out[:n_tokens]

    def save(self, path: str | Path) -> None:
        """Dump as ``token<TAB>bitstring`` lines."""
        with Path(path).open("w", encoding="utf-8") as fh:
            for tok, word in self.codewords.items():
                fh.write(f"{tok}\t{word}\n")


def _prefix_tree(codewords: dict[str, str]) -> dict:
    tree: dict = {}
    for tok, word in codewords.items():
        node = tree
        for b in word[:-1]:
            node = node.setdefault(int(b), {})
            if isinstance(node, str):
                raise ValueError(f"code is not prefix-free near {tok!r}")
        last = int(word[-1])
        if last in node:
            raise ValueError(f"code is not prefix-free near {tok!r}")
        node[last] = tok
    return tree


def huffman_build(dist: SourceDistribution) -> HuffmanCode:
    """Standard bottom-up merge; ties broken by token order for determinism."""
    if len(dist.tokens) == 0:
        raise ValueError("cannot build a code over an empty alphabet")
    if len(dist.tokens) == 1:
        return HuffmanCode({dist.tokens[0]: "0"})

    counter = itertools.count()
    heap: list[tuple[float, int, object]] = []
    for tok, p in zip(dist.tokens, dist.probs):
        weight = float(p) if p > 0 else _ZERO_PROB_WEIGHT
        heapq.heappush(heap, (weight, next(counter), tok))
    while len(heap) > 1:
        w1, _, left = heapq.heappop(heap)
        w2, _, right = heapq.heappop(heap)
        heapq.heappush(heap, (w1 + w2, next(counter), (left, right)))

    codewords: dict[str, str] = {}

    def walk(node: object, prefix: str) -> None:
        if isinstance(node, str):
            codewords[node] = prefix or "0"
            return
        left, right = node  # type: ignore[misc]
        walk(left, prefix + "0")
        walk(right, prefix + "1")

    walk(heap[0][2], "")
    return HuffmanCode(codewords)


@dataclass
class FixedWidthCode:
    """Uniform 6-bit indexing of at most 64 tokens."""

    codewords: dict[str, str]
    width: int = 6

    @classmethod
    def build(cls, tokens: Sequence[str], width: int = 6) -> "FixedWidthCode":
        if len(tokens) > 2**width:
            raise ValueError(
                f"{len(tokens)} tokens do not fit in {width}-bit codewords "
                f"(at most {2**width})"
            )
        codewords = {tok: format(i, f"0{width}b") for i, tok in enumerate(tokens)}
        return cls(codewords=codewords, width=width)

    def __post_init__(self) -> None:
        self._tokens = list(self.codewords)

    def kraft_sum(self) -> float:
        return sum(2.0 ** -len(w) for w in self.codewords.values())

    def mean_length(self, dist: SourceDistribution) -> float:
        return float(self.width)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        bits: list[int] = []
        for tok in tokens:
            word = self.codewords.get(tok) or self.codewords[UNK_TOKEN]
            bits.extend(1 if b == "1" else 0 for b in word)
        return np.array(bits, dtype=np.uint8)

    def decode(self, bits: np.ndarray, n_tokens: int) -> list[str]:
        out: list[str] = []
        for start in range(0, len(bits) - self.width + 1, self.width):
            index = 0
            for b in bits[start : start + self.width]:
                index = (index << 1) | int(b)
            out.append(self._tokens[index] if index < len(self._tokens) else UNK_TOKEN)
            if len(out) == n_tokens:
                break
        out.extend([UNK_TOKEN] * (n_tokens - len(out)))
        return out[:n_tokens]

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for tok, word in self.codewords.items():
                fh.write(f"{tok}\t{word}\n")


def build_code(kind: str, dist: SourceDistribution):
    if kind == "huffman":
        return huffman_build(dist)
    if kind == "fixed6":
        return FixedWidthCode.build(dist.tokens, width=6)
    raise ValueError(f"coding must be 'huffman' or 'fixed6', got {kind!r}")


_QAM_LEVELS = np.array([-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0]) / math.sqrt(42.0)
_GRAY3 = (0b000, 0b001, 0b011, 0b010, 0b110, 0b111, 0b101, 0b100)
_GRAY3_INVERSE = {g: i for i, g in enumerate(_GRAY3)}


class Qam64:
    """Square 64-QAM, Gray-labeled independently per I and Q axis.

    The average constellation power is exactly 1, so the channel's SNR
    convention applies unchanged.
    """

    bits_per_symbol = 6

    def constellation(self) -> np.ndarray:
        points = _QAM_LEVELS[:, None] + 1j * _QAM_LEVELS[None, :]
        return points.reshape(-1)

    def labels(self) -> list[str]:
        """Bit labels in the same order as :meth:`constellation`."""
        out = []
        for i in range(8):
            for q in range(8):
                out.append(format(_GRAY3[i], "03b") + format(_GRAY3[q], "03b"))
        return out

    def modulate(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8)
        if len(bits) % 6:
            bits = np.concatenate([bits, np.zeros(6 - len(bits) % 6, dtype=np.uint8)])
        groups = bits.reshape(-1, 6)
        weights = 1 << np.arange(2, -1, -1)
        i_gray = groups[:, :3] @ weights
        q_gray = groups[:, 3:] @ weights
        i_idx = np.array([_GRAY3_INVERSE[int(g)] for g in i_gray])
        q_idx = np.array([_GRAY3_INVERSE[int(g)] for g in q_gray])
        return _QAM_LEVELS[i_idx] + 1j * _QAM_LEVELS[q_idx]

    def demodulate(self, symbols: np.ndarray) -> np.ndarray:
        """Nearest-point decision, done per axis since the grid is square."""
        symbols = np.asarray(symbols, dtype=np.complex128)
        i_idx = _nearest_level(symbols.real)
        q_idx = _nearest_level(symbols.imag)
        bits = np.zeros((len(symbols), 6), dtype=np.uint8)
        for col in range(3):
            shift = 2 - col
            bits[:, col] = (np.array(_GRAY3)[i_idx] >> shift) & 1
            bits[:, 3 + col] = (np.array(_GRAY3)[q_idx] >> shift) & 1
        return bits.reshape(-1)


def _nearest_level(values: np.ndarray) -> np.ndarray:
    spacing = 2.0 / math.sqrt(42.0)
    idx = np.round((values - _QAM_LEVELS[0]) / spacing).astype(np.int64)
    return np.clip(idx, 0, 7)


def qam64_symbol_error_rate(snr_db: float) -> float:
    """Nearest-neighbor approximation for Gray square 64-QAM over AWGN.

    P_axis = 2 (1 - 1/sqrt(M)) Q(sqrt(3 snr / (M - 1))), and a symbol is
    correct only when both axes are, so SER = 1 - (1 - P_axis)^2.
    """
    snr = 10.0 ** (snr_db / 10.0)
    m = 64
    q_arg = math.sqrt(3.0 * snr / (m - 1))
    q_val = 0.5 * math.erfc(q_arg / math.sqrt(2.0))
    p_axis = 2.0 * (1.0 - 1.0 / math.sqrt(m)) * q_val
    return 1.0 - (1.0 - p_axis) ** 2


class TranslationDictionary:
    """One target word per source word, chosen by co-occurrence count."""

    def __init__(self, mapping: dict[str, str]):
        self.mapping = dict(mapping)

    def translate(self, tokens: Sequence[str]) -> list[str]:
        return [self.mapping.get(tok, tok) for tok in tokens]

    @classmethod
    def from_corpus(cls, corpus: ParallelCorpus) -> "TranslationDictionary":
        cooc: dict[str, Counter] = defaultdict(Counter)
        tgt_freq: Counter[str] = Counter()
        for src, tgt in corpus.pairs:
            tgt_freq.update(tgt)
            for s in src:
                cooc[s].update(tgt)
        mapping = {}
        for s, counts in cooc.items():
            # Deterministic: count, then global frequency, then spelling.
            mapping[s] = min(counts, key=lambda t: (-counts[t], -tgt_freq[t], t))
        return cls(mapping)


def baseline_transmit(
    tokens: Sequence[str],
    code,
    config: ChannelConfig,
    rng: np.random.Generator,
    translator: TranslationDictionary | None = None,
    modem: Qam64 | None = None,
) -> list[str]:
    """Run one sentence through the full classical chain."""
    if not tokens:
        return []
    modem = modem or Qam64()
    bits = code.encode(tokens)
    x = modem.modulate(bits)
    y, realization = channel_apply(x, config, rng)
    try:
        x_hat = zf_equalize(y, realization.h)
    except DeepFadeError:
        return [UNK_TOKEN] * len(tokens)
    decoded_bits = modem.demodulate(x_hat)
    decoded = code.decode(decoded_bits, len(tokens))
    if translator is not None:
        decoded = translator.translate(decoded)
    return decoded
