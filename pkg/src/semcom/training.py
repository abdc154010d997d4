"""Joint training of the transceiver with the information-aware loss.

Each step alternates two updates.  The statistics network takes a
gradient step on detached (sent, received) word samples; the transceiver
then descends

    loss = CE - alpha * I_hat(X; Y),

cross-entropy pulled toward correct words while the estimated symbol
information is pushed up.  With alpha = 0 the statistics network still
trains so the information estimate stays reportable.

Determinism: given the same data, configuration, and seed, training
produces bit-identical histories on one build, because every source of
randomness (shuffling, dropout, channel noise, shuffled pairings) is
derived from the seed.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from semcom.allocation import AllocationPolicy, allocate
from semcom.corpus import UNK_TOKEN, Vocab
from semcom.metrics import bleu_score
from semcom.mine import MIN_BATCH as MIN_MINE_BATCH
from semcom.mine import MineEstimator
from semcom.transceiver import SemanticTransceiverModel

CE_FLOOR = 1e-12


class TrainingDivergedError(RuntimeError):
    """Loss ran away from its starting point and stayed there."""


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 256
    lr: float = 1e-3
    grad_clip: float = 1.0
    alpha: float = 0.01
    reference_snr_db: float = 7.0
    channel_kind: str = "awgn"
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")


@dataclass
class EpochStats:
    epoch: int
    ce_nats: float
    mi_nats: float
    val_bleu: float
    wall_seconds: float


@dataclass
class TrainingHistory:
    rows: list[EpochStats] = field(default_factory=list)

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "ce_nats", "mi_nats", "val_bleu", "wall_seconds"])
            for row in self.rows:
                writer.writerow(
                    [row.epoch, row.ce_nats, row.mi_nats, row.val_bleu, row.wall_seconds]
                )

    @property
    def final(self) -> EpochStats | None:
        return self.rows[-1] if self.rows else None


def ce_loss(probs: torch.Tensor, targets: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean negative log posterior probability of the right word, in nats.

    ``probs`` holds per-position probability rows; entries are floored at
    1e-12 so an overconfident zero cannot produce an infinite loss.  Only
    positions selected by ``mask`` count; a mask with nothing selected is
    an error rather than a silent zero.
    """
    if not mask.any():
        raise ValueError("cross-entropy over zero unpadded positions")
    picked = probs.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
    picked = picked.clamp_min(CE_FLOOR)
    return -(torch.log(picked) * mask).sum() / mask.sum()


def ce_from_logits(logits: torch.Tensor, targets: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Numerically stable equal of :func:`ce_loss` on unnormalized scores."""
    if not mask.any():
        raise ValueError("cross-entropy over zero unpadded positions")
    logp = torch.log_softmax(logits, dim=-1)
    picked = logp.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
    return -(picked * mask).sum() / mask.sum()


def total_loss(ce: torch.Tensor, mi_nats: torch.Tensor | float, alpha: float) -> torch.Tensor:
    """The trained objective: accuracy now, information kept high."""
    return ce - alpha * mi_nats


@dataclass
class Batch:
    tokens: torch.Tensor
    targets: torch.Tensor
    allocations: torch.Tensor
    pad_mask: torch.Tensor
    loss_mask: torch.Tensor
    source_bits: torch.Tensor | None
    src_tokens: list[list[str]]
    tgt_tokens: list[list[str]]


def collate(
    pairs: Sequence[tuple[list[str], list[str]]],
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    policy: AllocationPolicy,
    bits_fn: Callable[[list[str]], np.ndarray] | None = None,
) -> Batch:
    """Pad a list of token pairs into aligned index, allocation, and mask tensors.

    Targets align per position with source words; a target shorter than
    its source pads out with ``<pad>`` (excluded from the loss), a longer
    one is truncated.
    """
    if not pairs:
        raise ValueError("cannot collate an empty batch")
    width = max(len(src) for src, _ in pairs)
    b = len(pairs)
    tokens = np.full((b, width), Vocab.pad_index, dtype=np.int64)
    targets = np.full((b, width), Vocab.pad_index, dtype=np.int64)
    alloc = np.zeros((b, width), dtype=np.int64)
    pad_mask = np.ones((b, width), dtype=bool)
    bits = None
    if bits_fn is not None:
        probe = bits_fn(pairs[0][0])
        bits = np.zeros((b, width, probe.shape[1]), dtype=np.float32)
    for i, (src, tgt) in enumerate(pairs):
        n = len(src)
        tokens[i, :n] = src_vocab.encode_tokens(src)
        clipped = tgt[:n]
        targets[i, : len(clipped)] = tgt_vocab.encode_tokens(clipped)
        alloc[i, :n] = allocate(src, policy).n_symbols
        pad_mask[i, :n] = False
        if bits is not None:
            bits[i, :n] = bits_fn(src)
    tokens_t = torch.from_numpy(tokens)
    targets_t = torch.from_numpy(targets)
    pad_t = torch.from_numpy(pad_mask)
    loss_mask = (~pad_t) & (targets_t != Vocab.pad_index)
    return Batch(
        tokens=tokens_t,
        targets=targets_t,
        allocations=torch.from_numpy(alloc),
        pad_mask=pad_t,
        loss_mask=loss_mask.to(torch.float32),
        source_bits=torch.from_numpy(bits) if bits is not None else None,
        src_tokens=[list(src) for src, _ in pairs],
        tgt_tokens=[list(tgt) for _, tgt in pairs],
    )


def decode_corpus(
    model: SemanticTransceiverModel,
    sentences: Sequence[list[str]],
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    policy: AllocationPolicy,
    channel_kind: str,
    snr_db: float,
    seed: int = 0,
    batch_size: int = 128,
    bits_fn: Callable[[list[str]], np.ndarray] | None = None,
    collect_symbols: bool = False,
) -> tuple[list[list[str]], tuple[torch.Tensor, torch.Tensor] | None]:
    """Batched evaluation decode of many sentences at one operating point."""
    model.eval()
    generator = torch.Generator().manual_seed(seed)
    decoded: list[list[str]] = []
    xs, ys = [], []
    with torch.no_grad():
        for start in range(0, len(sentences), batch_size):
            chunk = sentences[start : start + batch_size]
            batch = collate(
                [(s, s) for s in chunk], src_vocab, tgt_vocab, policy, bits_fn
            )
            out = model(
                batch.tokens,
                batch.allocations,
                batch.pad_mask,
                channel_kind=channel_kind,
                snr_db=snr_db,
                generator=generator,
                source_bits=batch.source_bits,
            )
            picks = out.logits.argmax(dim=-1)
            for i, sent in enumerate(chunk):
                n = len(sent)
                if bool(out.erased[i]):
                    decoded.append([UNK_TOKEN] * n)
                else:
                    decoded.append(tgt_vocab.decode_indices(picks[i, :n].tolist()))
            if collect_symbols:
                x_rows, y_rows = model.word_symbol_pairs(out, batch.pad_mask)
                xs.append(x_rows)
                ys.append(y_rows)
    pairs = (torch.cat(xs), torch.cat(ys)) if collect_symbols and xs else None
    return decoded, pairs


def train(
    model: SemanticTransceiverModel,
    pairs: Sequence[tuple[list[str], list[str]]],
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    policy: AllocationPolicy,
    config: TrainConfig,
    mine: MineEstimator | None = None,
    bits_fn: Callable[[list[str]], np.ndarray] | None = None,
) -> TrainingHistory:
    """Optimize the transceiver in place and return the epoch history."""
    history = TrainingHistory()
    if config.epochs == 0 or not pairs:
        return history

    rng = np.random.default_rng(config.seed)
    noise_generator = torch.Generator().manual_seed(config.seed + 7)
    torch.manual_seed(config.seed + 13)  # dropout stream

    pairs = list(pairs)
    n_val = int(len(pairs) * config.val_fraction)
    order = rng.permutation(len(pairs))
    val_pairs = [pairs[i] for i in order[:n_val]]
    train_pairs = [pairs[i] for i in order[n_val:]]
    if not train_pairs:
        raise ValueError("validation split consumed every pair")

    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    reference_ce: float | None = None
    runaway_epochs = 0

    for epoch in range(config.epochs):
        started = time.perf_counter()
        model.train()
        epoch_order = rng.permutation(len(train_pairs))
        ce_values: list[float] = []
        mi_values: list[float] = []
        for start in range(0, len(train_pairs), config.batch_size):
            batch_pairs = [train_pairs[i] for i in epoch_order[start : start + config.batch_size]]
            batch = collate(batch_pairs, src_vocab, tgt_vocab, policy, bits_fn)
            out = model(
                batch.tokens,
                batch.allocations,
                batch.pad_mask,
                channel_kind=config.channel_kind,
                snr_db=config.reference_snr_db,
                generator=noise_generator,
                source_bits=batch.source_bits,
            )
            ce = ce_from_logits(out.logits, batch.targets, batch.loss_mask)

            mi_term: torch.Tensor | float = 0.0
            if mine is not None:
                x_rows, y_rows = model.word_symbol_pairs(out, batch.pad_mask)
                # A ragged final batch can carry fewer word samples than the
                # statistic network's minimum; train it on plain CE instead.
                if x_rows.shape[0] >= MIN_MINE_BATCH:
                    mi_values.append(mine.update(x_rows, y_rows))
                    if config.alpha > 0:
                        mi_term = mine.dv_bound(x_rows, y_rows)

            loss = total_loss(ce, mi_term, config.alpha)
            optimizer.zero_grad()
            loss.backward()
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
            ce_values.append(float(ce.detach()))

        epoch_ce = float(np.mean(ce_values))
        epoch_mi = float(np.mean(mi_values)) if mi_values else 0.0

        val_bleu = math.nan
        if val_pairs:
            decoded, _ = decode_corpus(
                model,
                [src for src, _ in val_pairs],
                src_vocab,
                tgt_vocab,
                policy,
                config.channel_kind,
                config.reference_snr_db,
                seed=config.seed + 1000 + epoch,
                bits_fn=bits_fn,
            )
            val_bleu = bleu_score(decoded, [tgt for _, tgt in val_pairs])

        history.rows.append(
            EpochStats(
                epoch=epoch,
                ce_nats=epoch_ce,
                mi_nats=epoch_mi,
                val_bleu=val_bleu,
                wall_seconds=time.perf_counter() - started,
            )
        )

        if reference_ce is None:
            reference_ce = epoch_ce
        if epoch_ce > 2.0 * reference_ce:
            runaway_epochs += 1
            if runaway_epochs >= 3:
                raise TrainingDivergedError(
                    f"cross-entropy {epoch_ce:.3f} has exceeded twice its starting "
                    f"value {reference_ce:.3f} for three consecutive epochs"
                )
        else:
            runaway_epochs = 0

    return history


def gradient_check(
    model: SemanticTransceiverModel,
    batch: Batch,
    mine: MineEstimator | None = None,
    alpha: float = 0.01,
    snr_db: float = 7.0,
    channel_kind: str = "awgn",
    n_params: int = 10,
    eps: float = 1e-6,
    seed: int = 0,
) -> dict[str, float]:
    """Central finite differences against autograd on the training loss.

    Runs in double precision with frozen channel noise so the loss is a
    deterministic function of the parameters.  Returns the worst relative
    disagreement over ``n_params`` randomly chosen parameter entries.
    """
    model = model.double()
    model.train()
    for module in model.modules():
        if isinstance(module, torch.nn.Dropout):
            module.p = 0.0
        if isinstance(module, torch.nn.MultiheadAttention):
            module.dropout = 0.0

    tokens = batch.tokens
    alloc = batch.allocations
    pad = batch.pad_mask
    targets = batch.targets
    mask = batch.loss_mask.double()
    bits = batch.source_bits.double() if batch.source_bits is not None else None

    shape = (tokens.shape[0], tokens.shape[1], model.config.n_max, 2)
    gen = torch.Generator().manual_seed(seed)
    fixed_noise = torch.randn(shape, generator=gen, dtype=torch.float64)
    b = tokens.shape[0]
    fixed_h = torch.stack(
        [torch.ones(b, dtype=torch.float64), torch.zeros(b, dtype=torch.float64)], dim=1
    )
    if channel_kind == "rayleigh":
        fixed_h = math.sqrt(0.5) * torch.randn(b, 2, generator=gen, dtype=torch.float64)

    if mine is not None:
        mine.net.double()

    def loss_value() -> torch.Tensor:
        out = model(
            tokens,
            alloc,
            pad,
            channel_kind=channel_kind,
            snr_db=snr_db,
            fixed_h=fixed_h,
            fixed_noise=fixed_noise,
            source_bits=bits,
        )
        ce = ce_from_logits(out.logits, targets, mask)
        if mine is None or alpha == 0:
            return ce
        x_rows, y_rows = model.word_symbol_pairs(out, pad)
        joint = mine.net(x_rows, y_rows).mean()
        # Fixed roll instead of a shuffle keeps the loss deterministic.
        denominator = torch.exp(mine.net(x_rows, torch.roll(y_rows, 1, dims=0))).mean()
        return ce - alpha * (joint - torch.log(denominator))

    loss = loss_value()
    params = [p for p in model.parameters() if p.requires_grad]
    grads = torch.autograd.grad(loss, params, allow_unused=True)

    rng = np.random.default_rng(seed)
    flat_sizes = [p.numel() for p in params]
    total = sum(flat_sizes)
    worst = 0.0
    checked = 0
    while checked < n_params:
        flat_index = int(rng.integers(total))
        p_idx = 0
        while flat_index >= flat_sizes[p_idx]:
            flat_index -= flat_sizes[p_idx]
            p_idx += 1
        param = params[p_idx]
        grad = grads[p_idx]
        analytic = 0.0 if grad is None else float(grad.view(-1)[flat_index])

        with torch.no_grad():
            original = float(param.view(-1)[flat_index])
            param.view(-1)[flat_index] = original + eps
            plus = float(loss_value())
            param.view(-1)[flat_index] = original - eps
            minus = float(loss_value())
            param.view(-1)[flat_index] = original

        numeric = (plus - minus) / (2 * eps)
        scale = max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, abs(analytic - numeric) / scale)
        checked += 1

    model.float()
    if mine is not None:
        mine.net.float()
    return {"max_rel_err": worst, "loss": float(loss.detach()), "n_params": n_params}
