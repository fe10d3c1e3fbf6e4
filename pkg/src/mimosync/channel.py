"""Doubly-selective MIMO channel: tapped delay line with Jakes-faded gains,
carrier frequency offset injection, and seeded AWGN."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# ITU Vehicular A power-delay profile
_VEH_A_DELAYS_NS = (0.0, 310.0, 710.0, 1090.0, 1730.0, 2510.0)
_VEH_A_POWERS_DB = (0.0, -1.0, -9.0, -10.0, -15.0, -20.0)

SPEED_OF_LIGHT = 299_792_458.0


@dataclass
class SampleBlock:
    """Multi-antenna complex baseband samples with an absolute start index."""

    samples: np.ndarray        # (antennas, n) complex
    start_index: int = 0

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))

    @property
    def antennas(self) -> int:
        return self.samples.shape[0]

    def __len__(self) -> int:
        return self.samples.shape[1]

    def time_indices(self) -> np.ndarray:
        return self.start_index + np.arange(self.samples.shape[1])


@dataclass(frozen=True)
class TapProfile:
    """Integer-sample tap delays with normalized linear powers."""

    delays: tuple[int, ...]
    powers: tuple[float, ...]

    def __post_init__(self):
        if len(self.delays) != len(self.powers):
            raise ValueError("delay/power length mismatch")
        if self.delays[0] != 0 or any(
            b <= a for a, b in zip(self.delays, self.delays[1:])
        ):
            raise ValueError("delays must start at 0 and increase strictly")
        total = sum(self.powers)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"powers must sum to 1, got {total}")

    @property
    def max_delay(self) -> int:
        return self.delays[-1]


def single_path_profile() -> TapProfile:
    return TapProfile(delays=(0,), powers=(1.0,))


def two_path_profile(first_tap_db: float = -6.0, separation: int = 10) -> TapProfile:
    """Two Rayleigh taps with a weak leading path."""
    p0 = 10.0 ** (first_tap_db / 10.0)
    total = p0 + 1.0
    return TapProfile(delays=(0, separation), powers=(p0 / total, 1.0 / total))


def vehicular_a_profile(bandwidth_hz: float) -> TapProfile:
    """ITU Vehicular A, delays rounded to the nearest sample at 1/bandwidth."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    ts_ns = 1e9 / bandwidth_hz
    delays = [int(round(d / ts_ns)) for d in _VEH_A_DELAYS_NS]
    powers = np.array([10.0 ** (p / 10.0) for p in _VEH_A_POWERS_DB])
    # merge taps that round onto the same sample
    merged: dict[int, float] = {}
    for d, p in zip(delays, powers):
        merged[d] = merged.get(d, 0.0) + p
    ds = sorted(merged)
    ps = np.array([merged[d] for d in ds])
    ps = ps / ps.sum()
    return TapProfile(delays=tuple(ds), powers=tuple(float(p) for p in ps))


def doppler_normalized(speed_kmh: float, carrier_hz: float, bandwidth_hz: float) -> float:
    """f_d * T_s for a mobile at speed_kmh with the given carrier and sample rate."""
    fd = speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT
    return fd / bandwidth_hz


@dataclass
class ChannelRealization:
    """Time-varying tap gain tensor h[rx, tx, tap, n]."""

    gains: np.ndarray
    profile: TapProfile
    doppler_norm: float = 0.0

    @property
    def n_r(self) -> int:
        return self.gains.shape[0]

    @property
    def n_t(self) -> int:
        return self.gains.shape[1]

    @property
    def duration(self) -> int:
        return self.gains.shape[3]


def jakes_process(
    rng: np.random.Generator,
    doppler_norm: float,
    times: np.ndarray,
    n_sinusoids: int = 64,
) -> np.ndarray:
    """Unit-variance Rayleigh fading sampled at the given integer times.

    Sum of n_sinusoids complex sinusoids with equally spaced arrival angles
    (randomly rotated) and uniform phases; the temporal autocorrelation
    converges to J0(2*pi*doppler_norm*lag). Zero Doppler degenerates to a
    constant complex gain.
    """
    offset = rng.uniform()
    alpha = 2.0 * np.pi * (np.arange(n_sinusoids) + offset) / n_sinusoids
    phi = rng.uniform(0.0, 2.0 * np.pi, n_sinusoids)
    omega = 2.0 * np.pi * doppler_norm * np.cos(alpha)
    phase = np.outer(omega, np.asarray(times, dtype=float)) + phi[:, None]
    return np.exp(1j * phase).sum(axis=0) / np.sqrt(n_sinusoids)


def generate_channel(
    profile: TapProfile,
    doppler_norm: float,
    n_t: int,
    n_r: int,
    duration: int,
    seed: int,
    n_sinusoids: int = 64,
) -> ChannelRealization:
    """Independent Jakes-faded gain per (rx, tx, tap); deterministic in seed."""
    if duration < 1:
        raise ValueError("duration must be >= 1")
    if doppler_norm < 0:
        raise ValueError("doppler_norm must be >= 0")
    rng = np.random.default_rng(seed)
    taps = len(profile.delays)
    gains = np.empty((n_r, n_t, taps, duration), dtype=complex)
    # zero Doppler freezes each process; one time sample suffices
    t = np.arange(duration) if doppler_norm > 0 else np.zeros(1)
    for q in range(n_r):
        for p in range(n_t):
            for i, power in enumerate(profile.powers):
                gains[q, p, i] = np.sqrt(power) * jakes_process(
                    rng, doppler_norm, t, n_sinusoids
                )
    return ChannelRealization(gains=gains, profile=profile, doppler_norm=doppler_norm)


def identity_channel(n_ant: int, duration: int) -> ChannelRealization:
    """Pass-through channel: unit gain on the co-indexed antenna pair."""
    gains = np.zeros((n_ant, n_ant, 1, duration), dtype=complex)
    for q in range(n_ant):
        gains[q, q, 0] = 1.0
    return ChannelRealization(gains=gains, profile=single_path_profile())


def apply_channel(tx: SampleBlock, ch: ChannelRealization) -> SampleBlock:
    """r_q(n) = sum_p sum_tau h_qp(tau, n) * c_p(n - tau), noise-free."""
    if tx.antennas != ch.n_t:
        raise ValueError(f"channel expects {ch.n_t} TX antennas, got {tx.antennas}")
    n_in = len(tx)
    n_out = n_in + ch.profile.max_delay
    if ch.duration < n_out:
        raise ValueError(
            f"channel duration {ch.duration} shorter than required {n_out}"
        )
    out = np.zeros((ch.n_r, n_out), dtype=complex)
    for q in range(ch.n_r):
        for p in range(ch.n_t):
            for i, d in enumerate(ch.profile.delays):
                out[q, d : d + n_in] += ch.gains[q, p, i, d : d + n_in] * tx.samples[p]
    return SampleBlock(samples=out, start_index=tx.start_index)


def apply_cfo(x: SampleBlock, epsilon: float, n_fft: int = 512) -> SampleBlock:
    """Rotate by exp(+j*2*pi*n*epsilon/n_fft), n the absolute sample index."""
    n = x.time_indices()
    rot = np.exp(2j * np.pi * n * epsilon / n_fft)
    return SampleBlock(samples=x.samples * rot, start_index=x.start_index)


def add_awgn(x: SampleBlock, snr_db: float, seed: int) -> SampleBlock:
    """Circularly-symmetric complex Gaussian noise at the requested per-antenna SNR.

    Signal power is measured over the columns where any antenna is nonzero.
    snr_db = +inf disables noise.
    """
    if np.isposinf(snr_db):
        return SampleBlock(samples=x.samples.copy(), start_index=x.start_index)
    support = np.any(x.samples != 0, axis=0)
    if not support.any():
        raise ValueError("zero-power input: SNR is undefined")
    sig_power = float(np.mean(np.abs(x.samples[:, support]) ** 2))
    noise_var = sig_power / 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(seed)
    noise = np.sqrt(noise_var / 2.0) * (
        rng.standard_normal(x.samples.shape) + 1j * rng.standard_normal(x.samples.shape)
    )
    return SampleBlock(samples=x.samples + noise, start_index=x.start_index)
