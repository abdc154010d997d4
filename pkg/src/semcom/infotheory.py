"""Exact information quantities for small discrete transmission systems.

A system here is a message distribution p(m), an encoder from messages to
channel symbols (a deterministic map or a stochastic matrix), a discrete
channel p(y|x), and a receiver posterior q(m|y).  Everything is small
enough to enumerate, so entropies, mutual informations, the expected
posterior mismatch, and the training objective can be computed exactly
and used to cross-check each other.

All quantities are in nats.  Convert to bits only at reporting
boundaries via :func:`nats_to_bits`.

The checks encode three facts about the objective

    J = I(X;M) - (1 + alpha) I(X;Y) + beta * E_KL

where E_KL is the expected KL divergence from the true posterior p(m|y)
to the receiver model q(m|y):

* a deterministic encoder has I(X;M) = H(X) and H(X|M) = 0;
* cross-entropy always decomposes as CE = H(M) - I(M;Y) + E_KL, which
  for a deterministic encoder reads CE = H(X) - I(X;Y) + H(M|X) + E_KL
  and loses the H(M|X) term exactly when the encoder never merges two
  messages into one symbol;
* J <= CE - alpha * I(X;Y) for every system with alpha >= 0 and
  0 <= beta <= 1, with equality at beta = 1 for unambiguous
  deterministic encoders.  For deterministic encoders the gap is exactly
  (1 - beta) * E_KL + H(M|X).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

PROB_TOL = 1e-12
CHECK_TOL = 1e-9
POSTERIOR_FLOOR = 1e-12

LN2 = math.log(2.0)


def nats_to_bits(x: float) -> float:
    return x / LN2


def entropy(probs: np.ndarray | "FiniteDistribution") -> float:
    """Shannon entropy in nats, with 0 ln 0 = 0."""
    if isinstance(probs, FiniteDistribution):
        p = probs.probs
    else:
        p = np.asarray(probs, dtype=np.float64)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


@dataclass(frozen=True)
class FiniteDistribution:
    """Probability vector over a labeled finite support."""

    support: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.shape[0] != len(self.support):
            raise ValueError("probs must be a vector aligned with the support")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {float(probs.sum())!r}, expected 1")

    def __len__(self) -> int:
        return len(self.support)

    @classmethod
    def uniform(cls, labels: Sequence[str]) -> "FiniteDistribution":
        n = len(labels)
        return cls(tuple(labels), np.full(n, 1.0 / n))

    @classmethod
    def from_weights(cls, labels: Sequence[str], weights: Sequence[float]) -> "FiniteDistribution":
        w = np.asarray(weights, dtype=np.float64)
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive sum")
        return cls(tuple(labels), w / w.sum())


def _check_rows_sum_to_one(matrix: np.ndarray, what: str) -> None:
    sums = matrix.sum(axis=1)
    if np.any(matrix < 0) or np.any(np.abs(sums - 1.0) > PROB_TOL):
        raise ValueError(f"{what} rows must be probability vectors")


class FiniteSemanticSystem:
    """A fully enumerated message -> symbol -> output -> posterior pipeline.

    Parameters
    ----------
    p_m : FiniteDistribution
        Message (word) distribution.
    encoder : array-like
        Either an integer vector of length n_messages mapping each message
        to a symbol index (deterministic), or an (n_messages, n_symbols)
        row-stochastic matrix.
    channel : array-like
        (n_symbols, n_outputs) row-stochastic transition matrix p(y|x).
    posterior : array-like
        (n_outputs, n_messages) row-stochastic receiver model q(m|y).
        Zeros are tolerated at construction; analysis fails if a zero
        lands where the true joint puts mass, since the cross-entropy
        would be infinite.
    """

    def __init__(
        self,
        p_m: FiniteDistribution,
        encoder: np.ndarray | Sequence[int],
        channel: np.ndarray,
        posterior: np.ndarray,
    ):
        self.p_m = p_m
        n_m = len(p_m)

        encoder_arr = np.asarray(encoder)
        if encoder_arr.ndim == 1:
            encoder_arr = encoder_arr.astype(np.int64)
            self.deterministic_map: np.ndarray | None = encoder_arr
            if encoder_arr.shape[0] != n_m:
                raise ValueError("deterministic encoder must map every message")
            if np.any(encoder_arr < 0):
                raise ValueError("symbol indices must be nonnegative")
        elif encoder_arr.ndim == 2:
            encoder_arr = encoder_arr.astype(np.float64)
            self.deterministic_map = None
            if encoder_arr.shape[0] != n_m:
                raise ValueError("encoder matrix must have one row per message")
            _check_rows_sum_to_one(encoder_arr, "encoder")
        else:
            raise ValueError("encoder must be a map vector or a stochastic matrix")

        self.channel = np.asarray(channel, dtype=np.float64)
        if self.channel.ndim != 2:
            raise ValueError("channel must be a matrix")
        _check_rows_sum_to_one(self.channel, "channel")

        n_x = self.channel.shape[0]
        if self.deterministic_map is not None:
            if int(self.deterministic_map.max()) >= n_x:
                raise ValueError("encoder refers to a symbol the channel lacks")
            enc = np.zeros((n_m, n_x), dtype=np.float64)
            enc[np.arange(n_m), self.deterministic_map] = 1.0
            self.encoder_matrix = enc
        else:
            if encoder_arr.shape[1] != n_x:
                raise ValueError("encoder and channel disagree on the symbol alphabet")
            self.encoder_matrix = encoder_arr

        self.posterior = np.asarray(posterior, dtype=np.float64)
        if self.posterior.shape != (self.channel.shape[1], n_m):
            raise ValueError("posterior must be (n_outputs, n_messages)")
        _check_rows_sum_to_one(self.posterior, "posterior")

    @property
    def n_messages(self) -> int:
        return len(self.p_m)

    @property
    def n_symbols(self) -> int:
        return self.channel.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.channel.shape[1]

    @property
    def is_deterministic(self) -> bool:
        return self.deterministic_map is not None

    @property
    def is_unambiguous(self) -> bool:
        """True if the encoder is deterministic and never merges messages."""
        if self.deterministic_map is None:
            return False
        return len(set(self.deterministic_map.tolist())) == self.n_messages

    def joint_my(self) -> np.ndarray:
        """p(m, y) = p(m) sum_x p(x|m) p(y|x), shape (n_messages, n_outputs)."""
        p_y_given_m = self.encoder_matrix @ self.channel
        return self.p_m.probs[:, None] * p_y_given_m

    def joint_xy(self) -> np.ndarray:
        """p(x, y), shape (n_symbols, n_outputs)."""
        p_x = self.p_m.probs @ self.encoder_matrix
        return p_x[:, None] * self.channel

    def exact_posterior(self) -> np.ndarray:
        """The true p(m|y); rows with unreachable y fall back to uniform."""
        joint = self.joint_my()
        p_y = joint.sum(axis=0)
        post = np.full((self.n_outputs, self.n_messages), 1.0 / self.n_messages)
        reachable = p_y > 0
        post[reachable] = (joint[:, reachable] / p_y[reachable]).T
        return post

    def to_json(self) -> str:
        if self.deterministic_map is not None:
            encoder: dict = {"kind": "deterministic", "map": self.deterministic_map.tolist()}
        else:
            encoder = {"kind": "stochastic", "matrix": self.encoder_matrix.tolist()}
        blob = {
            "messages": list(self.p_m.support),
            "p_m": self.p_m.probs.tolist(),
            "encoder": encoder,
            "channel": self.channel.tolist(),
            "posterior": self.posterior.tolist(),
        }
        return json.dumps(blob, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FiniteSemanticSystem":
        blob = json.loads(text)
        p_m = FiniteDistribution(tuple(blob["messages"]), np.array(blob["p_m"]))
        enc = blob["encoder"]
        encoder = enc["map"] if enc["kind"] == "deterministic" else np.array(enc["matrix"])
        return cls(p_m, encoder, np.array(blob["channel"]), np.array(blob["posterior"]))


def _mutual_information(joint: np.ndarray) -> float:
    """I between the two axes of a joint table, in nats."""
    p_a = joint.sum(axis=1)
    p_b = joint.sum(axis=0)
    mask = joint > 0
    ratio = joint[mask] / (np.outer(p_a, p_b)[mask])
    return float(np.sum(joint[mask] * np.log(ratio)))


@dataclass
class InfoReport:
    """Exact information quantities of one system, all in nats."""

    h_m: float
    h_x: float
    h_x_given_m: float
    h_m_given_x: float
    i_xm: float
    i_xy: float
    i_my: float
    expected_kl: float
    expected_kl_reversed: float
    ce: float
    objective: float
    alpha: float
    beta: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def analyze(
    system: FiniteSemanticSystem,
    alpha: float = 0.01,
    beta: float = 1.0,
    floor_posterior: bool = False,
) -> InfoReport:
    """Enumerate the joint distribution and compute every report field.

    ``floor_posterior`` clips q(m|y) at 1e-12 before taking logs, which
    is how externally learned posteriors with hard zeros are admitted.
    Without it, a zero at a reachable (m, y) cell raises, because the
    cross-entropy is genuinely infinite there.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not 0 <= beta <= 1:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")

    p_m = system.p_m.probs
    h_m = entropy(p_m)

    p_x = p_m @ system.encoder_matrix
    h_x = entropy(p_x)

    joint_mx = p_m[:, None] * system.encoder_matrix
    i_xm = _mutual_information(joint_mx)
    h_x_given_m = max(0.0, h_x - i_xm)
    h_m_given_x = max(0.0, h_m - i_xm)

    i_xy = _mutual_information(system.joint_xy())

    joint_my = system.joint_my()
    i_my = _mutual_information(joint_my)

    q = system.posterior
    if floor_posterior:
        q = np.maximum(q, POSTERIOR_FLOOR)
    if np.any((joint_my > 0) & (q.T <= 0)):
        raise ValueError(
            "posterior assigns zero probability to a reachable (message, output) "
            "pair; cross-entropy is infinite"
        )

    mask = joint_my > 0
    ce = float(-np.sum(joint_my[mask] * np.log(q.T[mask])))

    true_post = system.exact_posterior()
    p_y = joint_my.sum(axis=0)
    expected_kl = 0.0
    expected_kl_reversed = 0.0
    for y in range(system.n_outputs):
        if p_y[y] <= 0:
            continue
        p_row = true_post[y]
        q_row = q[y]
        nz = p_row > 0
        expected_kl += float(p_y[y] * np.sum(p_row[nz] * np.log(p_row[nz] / q_row[nz])))
        if not math.isinf(expected_kl_reversed):
            qnz = q_row > 0
            if np.any(qnz & ~nz):
                expected_kl_reversed = math.inf
            else:
                expected_kl_reversed += float(
                    p_y[y] * np.sum(q_row[qnz] * np.log(q_row[qnz] / p_row[qnz]))
                )

    expected_kl = max(0.0, expected_kl)
    objective = i_xm - (1.0 + alpha) * i_xy + beta * expected_kl

    return InfoReport(
        h_m=h_m,
        h_x=h_x,
        h_x_given_m=h_x_given_m,
        h_m_given_x=h_m_given_x,
        i_xm=i_xm,
        i_xy=i_xy,
        i_my=i_my,
        expected_kl=expected_kl,
        expected_kl_reversed=expected_kl_reversed,
        ce=ce,
        objective=objective,
        alpha=alpha,
        beta=beta,
    )


@dataclass
class CompressionReport:
    i_xm: float
    h_x: float
    h_x_given_m: float
    residual: float
    holds: bool


@dataclass
class DecompositionReport:
    """Cross-entropy decomposition, asserted at the strength the encoder allows."""

    ce: float
    h_x: float
    i_xy: float
    expected_kl: float
    ambiguity: float
    residual: float
    general_residual: float
    asserted: bool
    holds: bool


@dataclass
class BoundReport:
    objective: float
    bound: float
    slack: float
    expected_slack: float | None
    equality_case: bool
    holds: bool


def check_compression_identity(system: FiniteSemanticSystem) -> CompressionReport:
    """Deterministic encoding cannot shed symbol entropy: I(X;M) = H(X), H(X|M) = 0."""
    if not system.is_deterministic:
        raise ValueError("the compression identity is about deterministic encoders")
    report = analyze(system)
    residual = max(abs(report.i_xm - report.h_x), abs(report.h_x_given_m))
    return CompressionReport(
        i_xm=report.i_xm,
        h_x=report.h_x,
        h_x_given_m=report.h_x_given_m,
        residual=residual,
        holds=residual <= CHECK_TOL,
    )


def check_ce_decomposition(system: FiniteSemanticSystem) -> DecompositionReport:
    """CE = H(X) - I(X;Y) + E_KL, up to the encoder's ambiguity term.

    The identity CE = H(M) - I(M;Y) + E_KL holds for every system.  With a
    deterministic encoder it becomes CE = H(X) - I(X;Y) + H(M|X) + E_KL,
    so the three-term form is exact precisely when no two messages share a
    symbol.  Deterministic systems are asserted at the matching strength;
    stochastic systems are only reported.
    """
    report = analyze(system)
    residual = report.ce - (report.h_x - report.i_xy + report.expected_kl)
    general_residual = report.ce - (report.h_m - report.i_my + report.expected_kl)

    if system.is_unambiguous:
        asserted = True
        holds = abs(residual) <= CHECK_TOL and abs(general_residual) <= CHECK_TOL
    elif system.is_deterministic:
        # The gap is exactly the merging ambiguity H(M|X).
        asserted = True
        holds = (
            abs(general_residual) <= CHECK_TOL
            and abs(residual - report.h_m_given_x) <= CHECK_TOL
        )
    else:
        asserted = False
        holds = abs(general_residual) <= CHECK_TOL

    return DecompositionReport(
        ce=report.ce,
        h_x=report.h_x,
        i_xy=report.i_xy,
        expected_kl=report.expected_kl,
        ambiguity=report.h_m_given_x,
        residual=residual,
        general_residual=general_residual,
        asserted=asserted,
        holds=holds,
    )


def check_loss_upper_bound(
    system: FiniteSemanticSystem,
    alpha: float = 0.01,
    beta: float = 1.0,
) -> BoundReport:
    """J <= CE - alpha * I(X;Y), with exactly characterized slack.

    The bound holds for every encoder.  For deterministic encoders the
    slack is exactly (1 - beta) * E_KL + H(M|X), which collapses to zero
    at beta = 1 for unambiguous encoders; both facts are checked.
    """
    report = analyze(system, alpha=alpha, beta=beta)
    bound = report.ce - alpha * report.i_xy
    slack = bound - report.objective

    expected_slack: float | None = None
    if system.is_deterministic:
        expected_slack = (1.0 - beta) * report.expected_kl + report.h_m_given_x

    equality_case = system.is_unambiguous and beta == 1.0
    holds = slack >= -CHECK_TOL
    if expected_slack is not None:
        holds = holds and abs(slack - expected_slack) <= CHECK_TOL
    if equality_case:
        holds = holds and abs(slack) <= CHECK_TOL

    return BoundReport(
        objective=report.objective,
        bound=bound,
        slack=slack,
        expected_slack=expected_slack,
        equality_case=equality_case,
        holds=holds,
    )


def random_system(
    rng: np.random.Generator,
    n_messages: int | None = None,
    n_symbols: int | None = None,
    n_outputs: int | None = None,
    encoder: str = "deterministic",
    posterior: str = "random",
) -> FiniteSemanticSystem:
    """Draw a random small system for randomized property checks.

    ``encoder`` is one of ``deterministic`` (arbitrary map, possibly
    merging), ``unambiguous`` (injective map), or ``stochastic``.
    ``posterior`` is ``random`` (strictly positive rows) or ``exact``
    (the true p(m|y)).
    """
    n_m = int(n_messages or rng.integers(2, 7))
    if encoder == "unambiguous":
        n_x = int(n_symbols or rng.integers(n_m, n_m + 3))
        if n_x < n_m:
            raise ValueError("an unambiguous encoder needs at least as many symbols as messages")
    else:
        n_x = int(n_symbols or rng.integers(2, 7))
    n_y = int(n_outputs or rng.integers(2, 7))

    labels = tuple(f"m{i}" for i in range(n_m))
    p_m = FiniteDistribution.from_weights(labels, rng.random(n_m) + 0.05)

    if encoder == "stochastic":
        enc = rng.random((n_m, n_x)) + 0.05
        enc /= enc.sum(axis=1, keepdims=True)
        enc_arg: np.ndarray | Sequence[int] = enc
    elif encoder == "unambiguous":
        enc_arg = rng.permutation(n_x)[:n_m]
    elif encoder == "deterministic":
        enc_arg = rng.integers(0, n_x, size=n_m)
    else:
        raise ValueError(f"unknown encoder kind {encoder!r}")

    channel = rng.random((n_x, n_y)) + 0.05
    channel /= channel.sum(axis=1, keepdims=True)

    system = FiniteSemanticSystem(p_m, enc_arg, channel, np.full((n_y, n_m), 1.0 / n_m))
    if posterior == "exact":
        q = system.exact_posterior()
    elif posterior == "random":
        q = rng.random((n_y, n_m)) + 0.05
        q /= q.sum(axis=1, keepdims=True)
    else:
        raise ValueError(f"unknown posterior kind {posterior!r}")
    return FiniteSemanticSystem(p_m, enc_arg, channel, q)
