"""AWGN and Rayleigh block-fading channels with a shared SNR convention.

Transmitted symbols are assumed to have unit average power, so an SNR of
``snr_db`` decibels means complex noise of variance 10^(-snr_db / 10).
The numpy path below serves the classical baseline and one-off
transmissions; an equivalent differentiable torch path used inside
training lives in :mod:`semcom.transceiver` and reuses
:func:`noise_variance` so the two cannot drift apart.

A fading block spans one sentence: the complex gain h ~ CN(0, 1) is
drawn once per :func:`apply` call and held constant across the symbol
vector.  Receivers see h (perfect channel knowledge) and undo it by
zero-forcing, y / h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEEP_FADE_THRESHOLD = 1e-9

KINDS = ("awgn", "rayleigh")


class DeepFadeError(RuntimeError):
    """Raised when a fading gain is too small to invert; the block is lost."""


@dataclass
class ChannelConfig:
    kind: str = "awgn"
    snr_db: float = 7.0
    symbol_duration: float = 1.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.symbol_duration <= 0:
            raise ValueError("symbol_duration must be positive")


@dataclass
class ChannelRealization:
    """What one block actually experienced: its gain and the noise power."""

    h: complex
    noise_power: float


def noise_variance(snr_db: float) -> float:
    """Complex noise variance for unit-power signaling.

    +inf dB means noiseless (variance 0).  -inf dB marks the
    pure-noise regime handled specially by :func:`apply`.
    """
    if math.isinf(snr_db):
        return 0.0 if snr_db > 0 else math.inf
    return 10.0 ** (-snr_db / 10.0)


def apply(
    x: np.ndarray,
    config: ChannelConfig,
    rng: np.random.Generator,
    h_override: complex | None = None,
) -> tuple[np.ndarray, ChannelRealization]:
    """Pass one block of complex symbols through the configured channel.

    Returns the received vector and the realization (gain, noise power).
    ``h_override`` substitutes a fixed gain, which calibration tests use.
    At snr_db = -inf the output is unit-variance noise carrying nothing.
    """
    x = np.asarray(x, dtype=np.complex128)
    sigma2 = noise_variance(config.snr_db)

    if config.kind == "rayleigh":
        h = complex(rng.normal(scale=math.sqrt(0.5)) + 1j * rng.normal(scale=math.sqrt(0.5)))
    else:
        h = 1.0 + 0.0j
    if h_override is not None:
        h = complex(h_override)

    if math.isinf(sigma2):
        noise = rng.normal(scale=math.sqrt(0.5), size=(2, x.size))
        y = (noise[0] + 1j * noise[1]).astype(np.complex128)
        return y, ChannelRealization(h=h, noise_power=math.inf)

    if sigma2 > 0:
        noise = rng.normal(scale=math.sqrt(sigma2 / 2.0), size=(2, x.size))
        n = noise[0] + 1j * noise[1]
    else:
        n = np.zeros(x.size, dtype=np.complex128)
    y = h * x + n.reshape(x.shape)
    return y, ChannelRealization(h=h, noise_power=sigma2)


def zf_equalize(y: np.ndarray, h: complex) -> np.ndarray:
    """Zero-forcing: divide out the known gain.  Deep fades are unrecoverable."""
    if abs(h) < DEEP_FADE_THRESHOLD:
        raise DeepFadeError(f"fading gain magnitude {abs(h):.3e} below invertible threshold")
    return np.asarray(y, dtype=np.complex128) / h


def measured_snr_db(x: np.ndarray, y: np.ndarray, h: complex = 1.0 + 0.0j) -> float:
    """Empirical SNR of a received block given what was sent."""
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    signal = np.mean(np.abs(h * x) ** 2)
    noise = np.mean(np.abs(y - h * x) ** 2)
    if noise == 0:
        return math.inf
    return 10.0 * math.log10(signal / noise)
