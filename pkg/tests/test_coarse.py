"""Coarse detection tests: metric oracles, scale invariance, detection."""

import numpy as np
import pytest

from mimosync.channel import SampleBlock, add_awgn, apply_cfo
from mimosync.coarse import (
    CoarseSyncError,
    coarse_sto,
    lambda_metric,
    power_metric,
)
from mimosync.frame import FrameSpec
from mimosync.preamble import build_preamble

SPEC = FrameSpec()


def embedded_preamble(start: int = 2000, tail: int = 600) -> SampleBlock:
    wave = build_preamble(SPEC)
    buf = np.zeros((2, start + SPEC.preamble_len + tail), dtype=complex)
    buf[:, start : start + SPEC.preamble_len] = wave.samples
    return SampleBlock(buf)


class TestPointMetrics:
    def test_power_all_zero(self):
        rx = SampleBlock(np.zeros((2, 1200), dtype=complex))
        assert power_metric(rx, 600) == 0.0

    def test_power_unit_modulus(self):
        rx = SampleBlock(np.exp(1j * np.arange(2400)).reshape(2, 1200))
        assert power_metric(rx, 600) == pytest.approx(1024.0)

    def test_power_matches_direct_sum(self):
        rng = np.random.default_rng(0)
        s = rng.standard_normal((2, 1500)) + 1j * rng.standard_normal((2, 1500))
        rx = SampleBlock(s)
        n = 900
        oracle = np.sum(np.abs(s[:, n - 511 : n + 1]) ** 2)
        assert power_metric(rx, n) == pytest.approx(oracle, rel=1e-12)

    def test_lambda_matches_direct_sum(self):
        rng = np.random.default_rng(1)
        s = rng.standard_normal((2, 2200)) + 1j * rng.standard_normal((2, 2200))
        rx = SampleBlock(s)
        n = 1800
        oracle = 0.0
        for q in range(2):
            for i in range(n - 511, n + 1):
                oracle += np.conj(s[q, i - 512]) * s[q, i]
        assert lambda_metric(rx, n) == pytest.approx(oracle, rel=1e-12)

    def test_lambda_coherent_on_repetition(self):
        # identical blocks at lag n_fft make |Lambda| equal the block energy
        rx = embedded_preamble(start=2000)
        n = 2000 + 2 * SPEC.n_cp + 2 * SPEC.n_fft - 1   # end of block 2
        lam = lambda_metric(rx, n)
        p = power_metric(rx, n)
        assert abs(lam) / p >= 0.99

    def test_lambda_scaling(self):
        rng = np.random.default_rng(2)
        s = rng.standard_normal((2, 2100)) + 0j
        a = lambda_metric(SampleBlock(s), 1500)
        b = lambda_metric(SampleBlock(3.0 * s), 1500)
        assert b == pytest.approx(9.0 * a, rel=1e-12)

    def test_insufficient_history_rejected(self):
        rx = SampleBlock(np.ones((2, 2048), dtype=complex))
        with pytest.raises(CoarseSyncError):
            lambda_metric(rx, 1000)
        with pytest.raises(CoarseSyncError):
            power_metric(rx, 100)


class TestCoarseSto:
    def test_noiseless_detection(self):
        trace = coarse_sto(embedded_preamble(start=2000), SPEC)
        assert abs(trace.argmax - 2000) <= SPEC.n_cp

    def test_detection_with_cfo(self):
        rx = apply_cfo(embedded_preamble(start=2000), 7.55)
        trace = coarse_sto(rx, SPEC)
        assert abs(trace.argmax - 2000) <= SPEC.n_cp

    def test_scale_invariance(self):
        base = embedded_preamble(start=1800)
        noisy = add_awgn(base, 10.0, seed=3)
        ref = coarse_sto(noisy, SPEC)
        for alpha in (0.01, 100.0):
            scaled = SampleBlock(alpha * noisy.samples)
            trace = coarse_sto(scaled, SPEC)
            assert trace.argmax == ref.argmax
            valid = np.isfinite(ref.metric)
            np.testing.assert_allclose(
                trace.metric[valid], ref.metric[valid], rtol=1e-9
            )

    def test_all_zero_rejected(self):
        with pytest.raises(CoarseSyncError):
            coarse_sto(SampleBlock(np.zeros((2, 6000), dtype=complex)), SPEC)

    def test_short_buffer_rejected(self):
        with pytest.raises(CoarseSyncError):
            coarse_sto(SampleBlock(np.ones((2, 2000), dtype=complex)), SPEC)

    def test_search_range_restricts_argmax(self):
        rx = embedded_preamble(start=2000)
        trace = coarse_sto(rx, SPEC, search=(1500, 2500))
        assert 1500 <= trace.argmax < 2500

    def test_streaming_traces_match_direct_evaluation(self):
        # the cumulative-sum sliding windows must not drift from the
        # direct sums even over a million-sample buffer
        rng = np.random.default_rng(6)
        n = 1_000_000
        s = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
        rx = SampleBlock(s)
        from mimosync.coarse import _sliding_traces

        lam, pw = _sliding_traces(s, SPEC.n_fft)
        for idx in rng.integers(1100, n, size=15):
            idx = int(idx)
            assert lam[idx] == pytest.approx(
                lambda_metric(rx, idx), rel=1e-9
            )
            assert pw[idx] == pytest.approx(power_metric(rx, idx), rel=1e-9)

    def test_noise_only_stays_below_preamble_metric(self):
        # the preamble metric dominates pure-noise metrics under equal noise
        rng_seeds = range(20)
        with_preamble = []
        noise_only = []
        for seed in rng_seeds:
            rx = add_awgn(embedded_preamble(start=2000), 10.0, seed=seed)
            t = coarse_sto(rx, SPEC)
            with_preamble.append(np.nanmax(t.metric))
            rng = np.random.default_rng(10_000 + seed)
            wn = SampleBlock(
                rng.standard_normal((2, 6000)) + 1j * rng.standard_normal((2, 6000))
            )
            noise_only.append(np.nanmax(coarse_sto(wn, SPEC).metric))
        assert max(noise_only) < 0.1 * min(with_preamble)
