"""Estimator front ends: fit on sentence pairs, predict through a channel.

``SemanticTransceiver`` wraps the learned chain; ``HuffmanQamLink`` wraps
the classical one.  Both follow the usual conventions: constructor
arguments are stored untouched, everything learned lands in trailing
underscore attributes, and ``get_params`` / ``set_params`` come from the
base class so model selection utilities work unchanged.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from semcom.allocation import AllocationPolicy, allocate, expected_n, max_symbols
from semcom.baseline import (
    HuffmanCode,
    Qam64,
    TranslationDictionary,
    baseline_transmit,
    build_code,
)
from semcom.channel import ChannelConfig
from semcom.corpus import ParallelCorpus, UNK_TOKEN, build_vocab, source_distribution
from semcom.metrics import MetricsReport, bleu, bleu_score
from semcom.mine import MineConfig, MineEstimator
from semcom.training import (
    EpochStats,
    TrainConfig,
    TrainingHistory,
    decode_corpus,
    train,
)
from semcom.transceiver import (
    ModelConfig,
    SemanticTransceiverModel,
    TransmissionResult,
    load_checkpoint,
    save_checkpoint,
)
from semcom.validation import as_pairs, as_sentences

# Below this corpus size the full-scale batch would make epochs too
# coarse, so small corpora drop to the smaller batch.
_SMALL_CORPUS = 5000
_FULL_BATCH = 256
_SMALL_BATCH = 64

_SOURCE_BITS_WIDTH = 24


class SemanticTransceiver(BaseEstimator):
    """Learned end-to-end text transmission as a fit/predict estimator."""

    def __init__(
        self,
        embed_dim: int = 64,
        attn_heads: int = 4,
        ffn_width: int = 128,
        attn_layers: int = 2,
        dropout: float = 0.1,
        n_max: int = 6,
        allocation: str = "fixed",
        n_min: int = 1,
        alpha: float = 0.01,
        channel: str = "awgn",
        reference_snr_db: float = 7.0,
        symbol_duration: float = 1.0,
        epochs: int = 30,
        batch_size: int | None = None,
        lr: float = 1e-3,
        grad_clip: float = 1.0,
        val_fraction: float = 0.1,
        mine_hidden: int = 128,
        mine_lr: float = 1e-3,
        mine_ema_decay: float = 0.99,
        use_source_bits: bool = False,
        min_freq: int = 1,
        seed: int = 0,
    ):
        self.embed_dim = embed_dim
        self.attn_heads = attn_heads
        self.ffn_width = ffn_width
        self.attn_layers = attn_layers
        self.dropout = dropout
        self.n_max = n_max
        self.allocation = allocation
        self.n_min = n_min
        self.alpha = alpha
        self.channel = channel
        self.reference_snr_db = reference_snr_db
        self.symbol_duration = symbol_duration
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.grad_clip = grad_clip
        self.val_fraction = val_fraction
        self.mine_hidden = mine_hidden
        self.mine_lr = mine_lr
        self.mine_ema_decay = mine_ema_decay
        self.use_source_bits = use_source_bits
        self.min_freq = min_freq
        self.seed = seed

    def _policy(self) -> AllocationPolicy:
        if self.allocation == "fixed":
            return AllocationPolicy(mode="fixed", n_fixed=self.n_max, n_min=self.n_min)
        return AllocationPolicy(
            mode="adaptive", n_fixed=self.n_max, n_min=self.n_min, n_max=self.n_max
        )

    def _bits_fn(self):
        if not self.use_source_bits:
            return None
        code = self.source_code_
        width = _SOURCE_BITS_WIDTH

        def bits_fn(tokens: list[str]) -> np.ndarray:
            rows = np.zeros((len(tokens), width), dtype=np.float32)
            for i, tok in enumerate(tokens):
                word = code.codewords.get(tok) or code.codewords[UNK_TOKEN]
                for j, b in enumerate(word[:width]):
                    rows[i, j] = 1.0 if b == "1" else 0.0
            return rows

        return bits_fn

    def fit(self, X, y=None) -> "SemanticTransceiver":
        """Train on (source, target) sentence pairs.

        ``X`` is a ``ParallelCorpus`` or a sequence of pairs; members may
        be raw strings or token lists.  ``y`` is unused and present for
        interface compatibility.
        """
        pairs = as_pairs(X)
        corpus = ParallelCorpus(pairs=pairs)

        self.src_vocab_ = build_vocab(corpus, "source", min_freq=self.min_freq)
        self.tgt_vocab_ = build_vocab(corpus, "target", min_freq=self.min_freq)
        self.policy_ = self._policy()

        if self.use_source_bits:
            dist = source_distribution(corpus, self.src_vocab_)
            self.source_code_ = build_code("huffman", dist)
        else:
            self.source_code_ = None

        config = ModelConfig(
            src_vocab_size=len(self.src_vocab_),
            tgt_vocab_size=len(self.tgt_vocab_),
            embed_dim=self.embed_dim,
            attn_heads=self.attn_heads,
            ffn_width=self.ffn_width,
            attn_layers=self.attn_layers,
            dropout=self.dropout,
            n_max=max_symbols(self.policy_),
            source_bits_dim=_SOURCE_BITS_WIDTH if self.use_source_bits else 0,
            seed=self.seed,
        )
        self.config_ = config
        self.model_ = SemanticTransceiverModel(config)

        self.mine_ = MineEstimator(
            x_dim=2 * config.n_max,
            y_dim=2 * config.n_max,
            config=MineConfig(
                hidden_width=self.mine_hidden,
                lr=self.mine_lr,
                ema_decay=self.mine_ema_decay,
            ),
            seed=self.seed + 101,
        )

        batch_size = self.batch_size
        if batch_size is None:
            batch_size = _SMALL_BATCH if len(pairs) < _SMALL_CORPUS else _FULL_BATCH

        self.train_config_ = TrainConfig(
            epochs=self.epochs,
            batch_size=batch_size,
            lr=self.lr,
            grad_clip=self.grad_clip,
            alpha=self.alpha,
            reference_snr_db=self.reference_snr_db,
            channel_kind=self.channel,
            val_fraction=self.val_fraction,
            seed=self.seed,
        )
        self.history_ = train(
            self.model_,
            pairs,
            self.src_vocab_,
            self.tgt_vocab_,
            self.policy_,
            self.train_config_,
            mine=self.mine_,
            bits_fn=self._bits_fn(),
        )
        self.n_pairs_ = len(pairs)
        return self

    def predict(
        self,
        X,
        snr_db: float | None = None,
        channel: str | None = None,
        seed: int = 0,
    ) -> list[list[str]]:
        """Decode sentences after one pass through the channel."""
        check_is_fitted(self, "model_")
        sentences = as_sentences(X)
        decoded, _ = decode_corpus(
            self.model_,
            sentences,
            self.src_vocab_,
            self.tgt_vocab_,
            self.policy_,
            channel or self.channel,
            self.reference_snr_db if snr_db is None else snr_db,
            seed=seed,
            bits_fn=self._bits_fn(),
        )
        return decoded

    def transmit(
        self,
        sentence,
        snr_db: float | None = None,
        channel: str | None = None,
        seed: int = 0,
    ) -> TransmissionResult:
        """Full single-sentence round trip, exposing symbols and posterior."""
        check_is_fitted(self, "model_")
        tokens = as_sentences([sentence])[0]
        alloc = allocate(tokens, self.policy_).n_symbols
        config = ChannelConfig(
            kind=channel or self.channel,
            snr_db=self.reference_snr_db if snr_db is None else snr_db,
            symbol_duration=self.symbol_duration,
        )
        bits_fn = self._bits_fn()
        bits = bits_fn(tokens) if bits_fn else None
        return self.model_.transmit(
            self.src_vocab_.encode_tokens(tokens),
            alloc,
            config,
            np.random.default_rng(seed),
            source_bits=bits,
        )

    def score(self, X, y=None, snr_db: float | None = None, seed: int = 0) -> float:
        """Corpus BLEU of decoded output against the pair targets."""
        pairs = as_pairs(X)
        decoded = self.predict([src for src, _ in pairs], snr_db=snr_db, seed=seed)
        return bleu_score(decoded, [tgt for _, tgt in pairs])

    def evaluate(
        self,
        X,
        snr_db: float | None = None,
        channel: str | None = None,
        seed: int = 0,
        max_mi_samples: int = 4096,
    ) -> MetricsReport:
        """Decode a pair set and assemble the full metric report."""
        check_is_fitted(self, "model_")
        pairs = as_pairs(X)
        sources = [src for src, _ in pairs]
        point_snr = self.reference_snr_db if snr_db is None else snr_db
        decoded, symbol_pairs = decode_corpus(
            self.model_,
            sources,
            self.src_vocab_,
            self.tgt_vocab_,
            self.policy_,
            channel or self.channel,
            point_snr,
            seed=seed,
            bits_fn=self._bits_fn(),
            collect_symbols=True,
        )
        references = [tgt for _, tgt in pairs]
        result = bleu(decoded, references)
        result_1gram = bleu(decoded, references, max_n=1)

        mi_nats = 0.0
        if symbol_pairs is not None:
            x_rows, y_rows = symbol_pairs
            if len(x_rows) > max_mi_samples:
                x_rows = x_rows[:max_mi_samples]
                y_rows = y_rows[:max_mi_samples]
            mi_nats = self.mine_.estimate(x_rows, y_rows)

        return MetricsReport.from_bleu(
            snr_db=point_snr,
            bleu_value=result.score,
            bleu_1gram=result_1gram.score,
            expected_symbols_per_word=expected_n(sources, self.policy_),
            mi_nats=mi_nats,
            symbol_duration=self.symbol_duration,
        )

    def save(self, path: str | Path) -> None:
        check_is_fitted(self, "model_")
        save_checkpoint(
            self.model_,
            path,
            self.src_vocab_,
            self.tgt_vocab_,
            extra={
                "params": self.get_params(),
                "mine": self.mine_.state_dict(),
                "history": [
                    (r.epoch, r.ce_nats, r.mi_nats, r.val_bleu, r.wall_seconds)
                    for r in self.history_.rows
                ],
                "source_code": (
                    dict(self.source_code_.codewords) if self.source_code_ else None
                ),
            },
        )

    @classmethod
    def load(cls, path: str | Path) -> "SemanticTransceiver":
        model, src_vocab, tgt_vocab, extra = load_checkpoint(path)
        est = cls(**extra["params"])
        est.model_ = model
        est.src_vocab_ = src_vocab
        est.tgt_vocab_ = tgt_vocab
        est.policy_ = est._policy()
        est.config_ = model.config
        est.mine_ = MineEstimator(
            x_dim=extra["mine"]["x_dim"],
            y_dim=extra["mine"]["y_dim"],
            config=MineConfig(
                hidden_width=est.mine_hidden, lr=est.mine_lr, ema_decay=est.mine_ema_decay
            ),
            seed=est.seed + 101,
        )
        est.mine_.load_state_dict(extra["mine"])
        code = extra.get("source_code")
        est.source_code_ = HuffmanCode(code) if code else None
        history = TrainingHistory()
        for row in extra.get("history", []):
            history.rows.append(EpochStats(*row))
        est.history_ = history
        return est


class HuffmanQamLink(BaseEstimator):
    """Classical chain as an estimator: source code, 64-QAM, word lookup."""

    def __init__(
        self,
        coding: str = "huffman",
        channel: str = "awgn",
        translate: bool = False,
        min_freq: int = 1,
        symbol_duration: float = 1.0,
        seed: int = 0,
    ):
        self.coding = coding
        self.channel = channel
        self.translate = translate
        self.min_freq = min_freq
        self.symbol_duration = symbol_duration
        self.seed = seed

    def fit(self, X, y=None) -> "HuffmanQamLink":
        pairs = as_pairs(X)
        corpus = ParallelCorpus(pairs=pairs)
        self.vocab_ = build_vocab(corpus, "source", min_freq=self.min_freq)
        self.distribution_ = source_distribution(corpus, self.vocab_)
        self.code_ = build_code(self.coding, self.distribution_)
        self.modem_ = Qam64()
        self.translator_ = TranslationDictionary.from_corpus(corpus) if self.translate else None
        return self

    def predict(self, X, snr_db: float = 12.0, seed: int = 0) -> list[list[str]]:
        check_is_fitted(self, "code_")
        sentences = as_sentences(X)
        rng = np.random.default_rng(seed)
        config = ChannelConfig(
            kind=self.channel, snr_db=snr_db, symbol_duration=self.symbol_duration
        )
        return [
            baseline_transmit(
                sent, self.code_, config, rng, translator=self.translator_, modem=self.modem_
            )
            for sent in sentences
        ]

    def score(self, X, y=None, snr_db: float = 12.0, seed: int = 0) -> float:
        pairs = as_pairs(X)
        decoded = self.predict([src for src, _ in pairs], snr_db=snr_db, seed=seed)
        return bleu_score(decoded, [tgt for _, tgt in pairs])

    def mean_bits_per_token(self) -> float:
        check_is_fitted(self, "code_")
        return self.code_.mean_length(self.distribution_)
