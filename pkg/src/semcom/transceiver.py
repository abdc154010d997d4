"""The learned transceiver: word vectors in, channel symbols out, words back.

Four stages, all trained jointly end to end:

* a generator turns token indices into contextual word vectors via
  embeddings, sinusoidal positions, and self-attention;
* a symbol encoder maps each word vector to up to n_max complex channel
  symbols (2 n_max reals, truncated to the word's allocation) and power
  normalizes the batch to unit mean per-symbol power;
* a symbol decoder maps received symbols (zero-padded back to n_max)
  into word vectors;
* an interpreter contextualizes them with self-attention and scores the
  target vocabulary per position.

The channel sits between encoder and decoder as a differentiable layer
sharing its SNR convention with :mod:`semcom.channel`.  Fading gains are
drawn once per sentence and removed by zero-forcing, with near-zero
gains flagged as erasures instead of amplified.

Padding is inert end to end: padded tokens are masked out of attention,
get zero symbols, and contribute nothing to the power statistic, so a
sentence's outputs do not depend on how wide its batch was padded.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from semcom.channel import (
    DEEP_FADE_THRESHOLD,
    ChannelConfig,
    ChannelRealization,
    DeepFadeError,
    apply as channel_apply,
    noise_variance,
    zf_equalize,
)
from semcom.corpus import Vocab

_POWER_EPS = 1e-12


@dataclass
class ModelConfig:
    """Architecture sizes and switches; validated on construction."""

    src_vocab_size: int
    tgt_vocab_size: int
    embed_dim: int = 64
    attn_heads: int = 4
    ffn_width: int = 128
    attn_layers: int = 2
    dropout: float = 0.1
    n_max: int = 6
    source_bits_dim: int = 0
    strict_empty: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.src_vocab_size < 5 or self.tgt_vocab_size < 5:
            raise ValueError("vocabularies must hold the reserved tokens plus content")
        if self.embed_dim % self.attn_heads != 0:
            raise ValueError(
                f"embed_dim={self.embed_dim} must be divisible by "
                f"attn_heads={self.attn_heads}"
            )
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.attn_layers < 1:
            raise ValueError("need at least one attention layer per side")


def sinusoidal_positions(length: int, dim: int, device=None) -> torch.Tensor:
    """Classic alternating sine/cosine position table, shape (length, dim)."""
    if dim % 2:
        raise ValueError("position dimension must be even")
    position = torch.arange(length, dtype=torch.float32, device=device).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, dim, 2, dtype=torch.float32, device=device)
        * (-math.log(10000.0) / dim)
    )
    table = torch.zeros(length, dim, device=device)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table


class AttentionBlock(nn.Module):
    """Post-norm transformer block: self-attention then a two-layer FFN."""

    def __init__(self, embed_dim: int, heads: int, ffn_width: int, dropout: float):
        super().__init__()
        self.attn = nn.MultiheadAttention(embed_dim, heads, dropout=dropout, batch_first=True)
        self.ffn = nn.Sequential(
            nn.Linear(embed_dim, ffn_width),
            nn.ReLU(),
            nn.Linear(ffn_width, embed_dim),
        )
        self.norm1 = nn.LayerNorm(embed_dim)
        self.norm2 = nn.LayerNorm(embed_dim)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        attn_out, _ = self.attn(x, x, x, key_padding_mask=pad_mask, need_weights=False)
        x = self.norm1(x + self.drop(attn_out))
        x = self.norm2(x + self.drop(self.ffn(x)))
        return x


class SemanticGenerator(nn.Module):
    """Token indices to contextual word vectors."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.embed = nn.Embedding(config.src_vocab_size, config.embed_dim, padding_idx=0)
        self.scale = math.sqrt(config.embed_dim)
        self.drop = nn.Dropout(config.dropout)
        self.blocks = nn.ModuleList(
            AttentionBlock(config.embed_dim, config.attn_heads, config.ffn_width, config.dropout)
            for _ in range(config.attn_layers)
        )

    def forward(self, tokens: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        x = self.embed(tokens) * self.scale
        x = x + sinusoidal_positions(tokens.shape[1], x.shape[-1], device=x.device)
        x = self.drop(x)
        for block in self.blocks:
            x = block(x, pad_mask)
        return x


class PowerNormalizer(nn.Module):
    """Scale symbols so the batch's valid symbols average unit power.

    Training batches use their own statistic and update a running mean;
    evaluation divides by the frozen running value, mirroring how batch
    normalization freezes its statistics.
    """

    def __init__(self, momentum: float = 0.1):
        super().__init__()
        self.momentum = momentum
        self.register_buffer("running_power", torch.ones(()))

    def forward(self, x: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
        # x: (B, N, S, 2); valid: (B, N, S) bool
        if self.training:
            power = (x * x).sum(-1)
            total = valid.sum()
            if total == 0:
                return x
            batch_power = (power * valid).sum() / total
            with torch.no_grad():
                self.running_power.mul_(1 - self.momentum).add_(
                    self.momentum * batch_power.detach()
                )
            scale = torch.sqrt(batch_power + _POWER_EPS)
        else:
            scale = torch.sqrt(self.running_power + _POWER_EPS)
        return x / scale


class SymbolEncoder(nn.Module):
    """Word vector to 2 n_max reals, truncated per allocation, power normalized."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        in_dim = config.embed_dim
        self.bits_embed: nn.Linear | None = None
        if config.source_bits_dim > 0:
            self.bits_embed = nn.Linear(config.source_bits_dim, 32)
            in_dim += 32
        self.net = nn.Sequential(
            nn.Linear(in_dim, config.ffn_width),
            nn.ReLU(),
            nn.Linear(config.ffn_width, 2 * config.n_max),
        )
        self.normalize = PowerNormalizer()
        self.n_max = config.n_max

    def forward(
        self,
        z: torch.Tensor,
        allocations: torch.Tensor,
        source_bits: torch.Tensor | None = None,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        if self.bits_embed is not None:
            if source_bits is None:
                raise ValueError("this model was built to fuse source code bits")
            z = torch.cat([z, self.bits_embed(source_bits)], dim=-1)
        raw = self.net(z)
        b, n, _ = raw.shape
        x = raw.view(b, n, self.n_max, 2)
        slots = torch.arange(self.n_max, device=z.device)
        valid = slots.view(1, 1, -1) < allocations.unsqueeze(-1)
        x = x * valid.unsqueeze(-1)
        x = self.normalize(x, valid)
        x = x * valid.unsqueeze(-1)
        return x, valid


class SymbolDecoder(nn.Module):
    """Received, zero-padded symbols back to a word vector."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(2 * config.n_max, config.ffn_width),
            nn.ReLU(),
            nn.Linear(config.ffn_width, config.embed_dim),
        )

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        b, n, s, _ = y.shape
        return self.net(y.reshape(b, n, 2 * s))


class SemanticInterpreter(nn.Module):
    """Contextualize received word vectors and score the target vocabulary."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.blocks = nn.ModuleList(
            AttentionBlock(config.embed_dim, config.attn_heads, config.ffn_width, config.dropout)
            for _ in range(config.attn_layers)
        )
        self.out = nn.Linear(config.embed_dim, config.tgt_vocab_size)

    def forward(self, z: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        for block in self.blocks:
            z = block(z, pad_mask)
        return self.out(z)


@dataclass
class ForwardOutput:
    """Everything one batched pass produces, kept for losses and estimates."""

    logits: torch.Tensor
    x: torch.Tensor
    y: torch.Tensor
    y_equalized: torch.Tensor
    h: torch.Tensor
    symbol_mask: torch.Tensor
    erased: torch.Tensor


@dataclass
class SemanticFrame:
    indices: np.ndarray
    z: np.ndarray


@dataclass
class SymbolBlock:
    symbols: np.ndarray
    offsets: np.ndarray

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)


@dataclass
class PosteriorBlock:
    probs: np.ndarray
    decoded: np.ndarray


@dataclass
class TransmissionResult:
    decoded: list[int]
    posterior: PosteriorBlock
    x: np.ndarray
    y: np.ndarray
    y_equalized: np.ndarray
    realization: ChannelRealization
    allocations: np.ndarray
    erased: bool


def channel_pass(
    x: torch.Tensor,
    valid: torch.Tensor,
    kind: str,
    snr_db: float,
    generator: torch.Generator | None = None,
    fixed_h: torch.Tensor | None = None,
    fixed_noise: torch.Tensor | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Differentiable counterpart of :func:`semcom.channel.apply`.

    x is (B, N, S, 2); the gain is block-constant per sentence.  Returns
    (y, h) with h as (B, 2) I/Q pairs.  Unused symbol slots receive
    nothing and stay zero.
    """
    b = x.shape[0]
    sigma2 = noise_variance(snr_db)

    if fixed_h is not None:
        h = fixed_h
    elif kind == "rayleigh":
        h = math.sqrt(0.5) * torch.randn(b, 2, generator=generator, dtype=x.dtype)
    else:
        h = torch.stack([torch.ones(b, dtype=x.dtype), torch.zeros(b, dtype=x.dtype)], dim=1)
    h = h.to(x.device)

    hr = h[:, 0].view(b, 1, 1)
    hi = h[:, 1].view(b, 1, 1)
    yr = hr * x[..., 0] - hi * x[..., 1]
    yi = hr * x[..., 1] + hi * x[..., 0]
    y = torch.stack([yr, yi], dim=-1)

    if math.isinf(sigma2):
        # Pure-noise regime: the output carries no trace of the input.
        y = torch.zeros_like(y)
        sigma2 = 1.0
    if sigma2 > 0:
        if fixed_noise is None:
            noise = torch.randn(x.shape, generator=generator, dtype=x.dtype) * math.sqrt(
                sigma2 / 2.0
            )
            noise = noise.to(x.device)
        else:
            noise = fixed_noise * math.sqrt(sigma2 / 2.0)
        y = y + noise
    return y * valid.unsqueeze(-1), h


def zf_equalize_tensor(y: torch.Tensor, h: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-sentence complex division; flags unrecoverable fades per sentence."""
    b = y.shape[0]
    hr = h[:, 0].view(b, 1, 1)
    hi = h[:, 1].view(b, 1, 1)
    mag2 = hr * hr + hi * hi
    erased = (mag2.view(b) < DEEP_FADE_THRESHOLD**2).detach()
    denom = mag2.clamp_min(DEEP_FADE_THRESHOLD**2)
    xr = (y[..., 0] * hr + y[..., 1] * hi) / denom
    xi = (y[..., 1] * hr - y[..., 0] * hi) / denom
    return torch.stack([xr, xi], dim=-1), erased


class SemanticTransceiverModel(nn.Module):
    """The composed generator / encoder / channel / decoder / interpreter."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        torch.manual_seed(config.seed)
        self.generator_net = SemanticGenerator(config)
        self.symbol_encoder = SymbolEncoder(config)
        self.symbol_decoder = SymbolDecoder(config)
        self.interpreter_net = SemanticInterpreter(config)

    def forward(
        self,
        tokens: torch.Tensor,
        allocations: torch.Tensor,
        pad_mask: torch.Tensor,
        *,
        channel_kind: str = "awgn",
        snr_db: float = 7.0,
        generator: torch.Generator | None = None,
        fixed_h: torch.Tensor | None = None,
        fixed_noise: torch.Tensor | None = None,
        source_bits: torch.Tensor | None = None,
    ) -> ForwardOutput:
        z = self.generator_net(tokens, pad_mask)
        x, symbol_mask = self.symbol_encoder(z, allocations, source_bits)
        y, h = channel_pass(
            x, symbol_mask, channel_kind, snr_db, generator, fixed_h, fixed_noise
        )
        y_eq, erased = zf_equalize_tensor(y, h)
        y_eq = y_eq * symbol_mask.unsqueeze(-1)
        z_hat = self.symbol_decoder(y_eq)
        logits = self.interpreter_net(z_hat, pad_mask)
        return ForwardOutput(
            logits=logits,
            x=x,
            y=y,
            y_equalized=y_eq,
            h=h,
            symbol_mask=symbol_mask,
            erased=erased,
        )

    def word_symbol_pairs(self, out: ForwardOutput, pad_mask: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Per-word (sent, received) sample pairs for mutual information work.

        Each row interleaves I/Q across the n_max slots; unused slots are
        zero on both sides, so rows have a fixed width of 2 n_max.
        """
        keep = ~pad_mask
        x_rows = out.x[keep].reshape(-1, 2 * self.config.n_max)
        y_rows = out.y[keep].reshape(-1, 2 * self.config.n_max)
        return x_rows, y_rows

    # Single-sentence operations used by transmit and by inspection code.

    def _require_tokens(self, indices: Sequence[int]) -> np.ndarray:
        arr = np.asarray(list(indices), dtype=np.int64)
        if arr.size == 0:
            if self.config.strict_empty:
                raise ValueError("refusing to transmit an empty sentence")
            return arr
        if arr.min() < 0 or arr.max() >= self.config.src_vocab_size:
            raise ValueError("token index outside the source vocabulary")
        return arr

    def generate(self, indices: Sequence[int]) -> SemanticFrame:
        arr = self._require_tokens(indices)
        if arr.size == 0:
            return SemanticFrame(indices=arr, z=np.zeros((0, self.config.embed_dim), np.float32))
        self.eval()
        with torch.no_grad():
            tokens = torch.from_numpy(arr).unsqueeze(0)
            pad = torch.zeros_like(tokens, dtype=torch.bool)
            z = self.generator_net(tokens, pad)
        return SemanticFrame(indices=arr, z=z.squeeze(0).numpy())

    def channel_encode(
        self,
        frame: SemanticFrame,
        allocations: np.ndarray,
        source_bits: np.ndarray | None = None,
    ) -> SymbolBlock:
        n = len(frame.indices)
        alloc = np.asarray(allocations, dtype=np.int64)
        if alloc.shape != (n,):
            raise ValueError("need one allocation per word")
        if n == 0:
            return SymbolBlock(symbols=np.zeros(0, np.complex128), offsets=np.zeros(1, np.int64))
        if alloc.min() < 1 or alloc.max() > self.config.n_max:
            raise ValueError(f"allocations must lie in [1, {self.config.n_max}]")
        self.eval()
        with torch.no_grad():
            z = torch.from_numpy(frame.z).unsqueeze(0)
            bits = None
            if source_bits is not None:
                bits = torch.from_numpy(source_bits.astype(np.float32)).unsqueeze(0)
            x, valid = self.symbol_encoder(z, torch.from_numpy(alloc).unsqueeze(0), bits)
        x = x.squeeze(0).numpy()
        flat = [x[i, : alloc[i], 0] + 1j * x[i, : alloc[i], 1] for i in range(n)]
        offsets = np.concatenate([[0], np.cumsum(alloc)])
        return SymbolBlock(symbols=np.concatenate(flat), offsets=offsets)

    def channel_decode(self, symbols: np.ndarray, offsets: np.ndarray) -> np.ndarray:
        """Regroup a flat symbol vector by offsets, zero-pad, and decode."""
        offsets = np.asarray(offsets, dtype=np.int64)
        n = len(offsets) - 1
        padded = np.zeros((n, self.config.n_max, 2), dtype=np.float32)
        for i in range(n):
            seg = np.asarray(symbols[offsets[i] : offsets[i + 1]], dtype=np.complex128)
            padded[i, : len(seg), 0] = seg.real
            padded[i, : len(seg), 1] = seg.imag
        self.eval()
        with torch.no_grad():
            z_hat = self.symbol_decoder(torch.from_numpy(padded).unsqueeze(0))
        return z_hat.squeeze(0).numpy()

    def interpret(self, z_hat: np.ndarray) -> PosteriorBlock:
        self.eval()
        with torch.no_grad():
            z = torch.from_numpy(np.asarray(z_hat, dtype=np.float32)).unsqueeze(0)
            pad = torch.zeros(z.shape[:2], dtype=torch.bool)
            logits = self.interpreter_net(z, pad)
            probs = torch.softmax(logits, dim=-1).squeeze(0).numpy()
        return PosteriorBlock(probs=probs, decoded=probs.argmax(axis=1))

    def transmit(
        self,
        indices: Sequence[int],
        allocations: np.ndarray,
        config: ChannelConfig,
        rng: np.random.Generator,
        source_bits: np.ndarray | None = None,
    ) -> TransmissionResult:
        """One sentence through the whole learned chain, numpy channel included."""
        frame = self.generate(indices)
        if frame.indices.size == 0:
            empty = np.zeros(0, np.complex128)
            post = PosteriorBlock(
                probs=np.zeros((0, self.config.tgt_vocab_size)), decoded=np.zeros(0, np.int64)
            )
            return TransmissionResult(
                decoded=[], posterior=post, x=empty, y=empty, y_equalized=empty,
                realization=ChannelRealization(h=1.0 + 0.0j, noise_power=0.0),
                allocations=np.asarray(allocations, dtype=np.int64), erased=False,
            )
        block = self.channel_encode(frame, allocations, source_bits)
        y, realization = channel_apply(block.symbols, config, rng)
        try:
            y_eq = zf_equalize(y, realization.h)
            erased = False
        except DeepFadeError:
            y_eq = np.zeros_like(y)
            erased = True
        z_hat = self.channel_decode(y_eq, block.offsets)
        posterior = self.interpret(z_hat)
        decoded = [int(i) for i in posterior.decoded]
        if erased:
            decoded = [Vocab.unk_index] * len(decoded)  # every word lost with the fade
        return TransmissionResult(
            decoded=decoded,
            posterior=posterior,
            x=block.symbols,
            y=y,
            y_equalized=y_eq,
            realization=realization,
            allocations=np.asarray(allocations, dtype=np.int64),
            erased=erased,
        )


CHECKPOINT_VERSION = 1


def save_checkpoint(
    model: SemanticTransceiverModel,
    path: str | Path,
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    extra: dict | None = None,
) -> None:
    """Single-file checkpoint carrying weights, config, and vocab identities."""
    blob = {
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "state_dict": model.state_dict(),
        "src_vocab_hash": src_vocab.content_hash(),
        "tgt_vocab_hash": tgt_vocab.content_hash(),
        "src_tokens": src_vocab.tokens,
        "tgt_tokens": tgt_vocab.tokens,
        "extra": extra or {},
    }
    torch.save(blob, Path(path))


def load_checkpoint(
    path: str | Path,
    src_vocab: Vocab | None = None,
    tgt_vocab: Vocab | None = None,
) -> tuple[SemanticTransceiverModel, Vocab, Vocab, dict]:
    """Restore a checkpoint; refuses to pair weights with the wrong vocabulary."""
    blob = torch.load(Path(path), map_location="cpu", weights_only=False)
    if blob.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {blob.get('version')!r}")
    stored_src = Vocab(blob["src_tokens"], side="source")
    stored_tgt = Vocab(blob["tgt_tokens"], side="target")
    if stored_src.content_hash() != blob["src_vocab_hash"]:
        raise ValueError("checkpoint source tokens do not match their stored hash")
    if stored_tgt.content_hash() != blob["tgt_vocab_hash"]:
        raise ValueError("checkpoint target tokens do not match their stored hash")
    if src_vocab is not None and src_vocab.content_hash() != blob["src_vocab_hash"]:
        raise ValueError("source vocabulary does not match the checkpoint")
    if tgt_vocab is not None and tgt_vocab.content_hash() != blob["tgt_vocab_hash"]:
        raise ValueError("target vocabulary does not match the checkpoint")
    model = SemanticTransceiverModel(ModelConfig(**blob["config"]))
    model.load_state_dict(blob["state_dict"])
    model.eval()
    return model, src_vocab or stored_src, tgt_vocab or stored_tgt, blob["extra"]
