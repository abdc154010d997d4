"""Complex baseband channel: noise calibration, fading, equalization."""

from __future__ import annotations

import math

import numpy as np
import pytest

from semcom.channel import (
    DEEP_FADE_THRESHOLD,
    ChannelConfig,
    DeepFadeError,
    apply,
    measured_snr_db,
    noise_variance,
    zf_equalize,
)


def unit_power_block(rng, n):
    """QPSK-like unit-power complex symbols."""
    phases = rng.integers(0, 4, size=n)
    return np.exp(1j * (math.pi / 4 + phases * math.pi / 2))


class TestConfig:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            ChannelConfig(kind="optical")

    def test_rejects_nonpositive_duration(self):
        with pytest.raises(ValueError):
            ChannelConfig(symbol_duration=0.0)


class TestNoiseVariance:
    def test_reference_points(self):
        assert noise_variance(0.0) == pytest.approx(1.0, abs=1e-15)
        assert noise_variance(10.0) == pytest.approx(0.1, abs=1e-15)
        assert noise_variance(-10.0) == pytest.approx(10.0, abs=1e-12)

    def test_infinities(self):
        assert noise_variance(math.inf) == 0.0
        assert math.isinf(noise_variance(-math.inf))


class TestAwgn:
    def test_noiseless_is_identity(self):
        rng = np.random.default_rng(0)
        x = unit_power_block(rng, 64)
        y, realization = apply(x, ChannelConfig(kind="awgn", snr_db=math.inf), rng)
        assert np.array_equal(y, x)
        assert realization.h == 1.0 + 0.0j
        assert realization.noise_power == 0.0

    @pytest.mark.parametrize("snr_db", (0.0, 7.0, 15.0))
    def test_calibration_within_a_tenth_db(self, snr_db):
        rng = np.random.default_rng(42)
        x = unit_power_block(rng, 200_000)
        y, _ = apply(x, ChannelConfig(kind="awgn", snr_db=snr_db), rng)
        assert measured_snr_db(x, y) == pytest.approx(snr_db, abs=0.1)

    def test_deterministic_under_seeded_rng(self):
        x = unit_power_block(np.random.default_rng(1), 32)
        config = ChannelConfig(kind="awgn", snr_db=5.0)
        y1, _ = apply(x, config, np.random.default_rng(9))
        y2, _ = apply(x, config, np.random.default_rng(9))
        assert np.array_equal(y1, y2)

    def test_pure_noise_regime_carries_nothing(self):
        rng = np.random.default_rng(3)
        x = unit_power_block(rng, 100_000)
        y, realization = apply(x, ChannelConfig(kind="awgn", snr_db=-math.inf), rng)
        assert math.isinf(realization.noise_power)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(1.0, rel=0.05)
        corr = np.abs(np.vdot(x, y)) / len(x)
        assert corr < 0.02


class TestRayleigh:
    def test_gain_power_is_calibrated(self):
        rng = np.random.default_rng(7)
        config = ChannelConfig(kind="rayleigh", snr_db=math.inf)
        x = np.ones(1, dtype=np.complex128)
        gains = []
        for _ in range(4000):
            _, realization = apply(x, config, rng)
            gains.append(realization.h)
        mean_power = np.mean(np.abs(np.array(gains)) ** 2)
        assert mean_power == pytest.approx(1.0, rel=0.05)

    def test_noiseless_zero_forcing_recovers_exactly(self):
        rng = np.random.default_rng(8)
        x = unit_power_block(rng, 48)
        y, realization = apply(x, ChannelConfig(kind="rayleigh", snr_db=math.inf), rng)
        assert not np.allclose(y, x)  # the gain did something
        x_hat = zf_equalize(y, realization.h)
        assert np.allclose(x_hat, x, atol=1e-12)

    def test_h_override_is_used(self):
        rng = np.random.default_rng(9)
        x = unit_power_block(rng, 16)
        y, realization = apply(
            x, ChannelConfig(kind="rayleigh", snr_db=math.inf), rng, h_override=2.0 + 0j
        )
        assert realization.h == 2.0 + 0.0j
        assert np.allclose(y, 2.0 * x)


class TestZfEqualize:
    def test_divides_out_the_gain(self):
        y = np.array([2.0 + 2.0j, -4.0j])
        out = zf_equalize(y, 2.0 + 0.0j)
        assert np.allclose(out, [1.0 + 1.0j, -2.0j])

    def test_deep_fade_raises(self):
        with pytest.raises(DeepFadeError):
            zf_equalize(np.ones(4, dtype=np.complex128), DEEP_FADE_THRESHOLD / 10)


class TestMeasuredSnr:
    def test_infinite_when_noiseless(self):
        x = np.ones(8, dtype=np.complex128)
        assert math.isinf(measured_snr_db(x, x))

    def test_hand_value(self):
        x = np.ones(4, dtype=np.complex128)
        y = x + np.full(4, 0.1 + 0.0j)  # noise power 0.01 -> SNR 20 dB
        assert measured_snr_db(x, y) == pytest.approx(20.0, abs=1e-9)

    def test_accounts_for_gain(self):
        x = np.ones(4, dtype=np.complex128)
        h = 3.0 + 0.0j
        y = h * x
        assert math.isinf(measured_snr_db(x, y, h=h))
