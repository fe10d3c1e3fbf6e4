"""Zadoff-Chu sequences and the frequency-orthogonal two-antenna preamble.

The preamble is built from two ZC roots. Each root fills one FFT block:
antenna 1 carries the full sequence on the even occupied subcarriers,
antenna 2 carries the same sequence on the odd ones, so the two antennas
have disjoint spectral support. Each block is transmitted twice back to
back behind a double-length cyclic prefix, giving the repetition at lag
n_fft that the coarse detector and the fractional CFO estimator rely on:

    [ CP(2*n_cp) | D1 | D1 | CP(2*n_cp) | D2 | D2 ]      (per antenna)

Total length 2 * n_train = 4 * (n_fft + n_cp) samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frame import FrameSpec, FrameSpecError


class InvalidRootError(ValueError):
    """Root not coprime to the sequence length: the ZAC property would fail."""


@dataclass(frozen=True)
class CazacSequence:
    """Unit-modulus sequence with zero cyclic autocorrelation at nonzero lags."""

    values: np.ndarray
    root: int

    def __len__(self) -> int:
        return len(self.values)

    def cyclic_autocorrelation(self) -> np.ndarray:
        """Cyclic autocorrelation at every lag, lag 0 first."""
        v = self.values
        return np.fft.ifft(np.abs(np.fft.fft(v)) ** 2)


def zadoff_chu(n_mu: int, mu: int) -> CazacSequence:
    """Generate the length-n_mu Zadoff-Chu sequence with root mu.

    Even lengths use exp(-j*pi*mu*k^2/n_mu), odd lengths
    exp(-j*pi*mu*k*(k+1)/n_mu).
    """
    if n_mu < 2:
        raise ValueError(f"sequence length must be >= 2, got {n_mu}")
    mu = mu % n_mu
    if math.gcd(mu, n_mu) != 1:
        raise InvalidRootError(f"root {mu} shares a factor with length {n_mu}")
    k = np.arange(n_mu)
    if n_mu % 2 == 0:
        phase = -np.pi * mu * k * k / n_mu
    else:
        phase = -np.pi * mu * k * (k + 1) / n_mu
    return CazacSequence(values=np.exp(1j * phase), root=mu)


def difference_sequence(spec: FrameSpec) -> CazacSequence:
    """Element-wise product C_mu1 * conj(C_mu2).

    Equals the ZC sequence with root (mu1 - mu2) mod n_mu by the chirp
    product identity. Built from the product rather than zadoff_chu because
    for even n_mu the root difference is never coprime to the length (both
    roots are odd), so the ZAC property does not transfer.
    """
    a = zadoff_chu(spec.n_mu, spec.mu1).values
    b = zadoff_chu(spec.n_mu, spec.mu2).values
    return CazacSequence(values=a * np.conj(b), root=(spec.mu1 - spec.mu2) % spec.n_mu)


def ofdm_modulate(freq_grid: np.ndarray, n_cp: int) -> np.ndarray:
    """IDFT with 1/sqrt(N) normalization, cyclic prefix prepended.

    data[n] = (1/sqrt(N)) * sum_k X[k] exp(j*2*pi*k*n/N)
    """
    grid = np.asarray(freq_grid, dtype=complex)
    if grid.ndim != 1:
        raise ValueError("frequency grid must be one-dimensional")
    n_fft = len(grid)
    if not 0 <= n_cp <= n_fft:
        raise ValueError(f"cyclic prefix length {n_cp} out of range for n_fft={n_fft}")
    data = np.fft.ifft(grid) * np.sqrt(n_fft)
    if n_cp == 0:
        return data
    return np.concatenate([data[-n_cp:], data])


def symbol_grids(spec: FrameSpec) -> np.ndarray:
    """Frequency grids X_l^p[k], shape (n_t, 4, n_fft).

    Blocks 1 and 2 carry the mu1 sequence, blocks 3 and 4 the mu2 sequence;
    antenna 1 on the even occupied subcarriers, antenna 2 on the odd ones.
    """
    grids = np.zeros((spec.n_t, 4, spec.n_fft), dtype=complex)
    even = list(spec.even_subcarriers)
    odd = list(spec.odd_subcarriers)
    for half, mu in ((0, spec.mu1), (1, spec.mu2)):
        seq = zadoff_chu(spec.n_mu, mu).values
        for sym in (2 * half, 2 * half + 1):
            grids[0, sym, even] = seq
            grids[1, sym, odd] = seq
    return grids


@dataclass(frozen=True)
class PreambleWaveform:
    """Per-antenna time-domain preamble plus its frequency grids."""

    samples: np.ndarray      # (n_t, 2*n_train)
    freq_grids: np.ndarray   # (n_t, 4, n_fft)
    spec: FrameSpec

    def data_block(self, antenna: int, block: int) -> np.ndarray:
        """Time samples of FFT block 1..4 (no cyclic prefix)."""
        if block not in (1, 2, 3, 4):
            raise ValueError("block index is 1-based, 1..4")
        spec = self.spec
        pair, copy = divmod(block - 1, 2)
        start = pair * spec.n_train + 2 * spec.n_cp + copy * spec.n_fft
        return self.samples[antenna, start : start + spec.n_fft]


def build_preamble(spec: FrameSpec) -> PreambleWaveform:
    """Assemble the 4-block preamble waveform for every transmit antenna."""
    grids = symbol_grids(spec)
    if grids.shape[2] != spec.n_fft:
        raise FrameSpecError("grid length does not match n_fft")
    parts = []
    for p in range(spec.n_t):
        halves = []
        for half in range(2):
            with_cp = ofdm_modulate(grids[p, 2 * half], 2 * spec.n_cp)
            data = with_cp[2 * spec.n_cp :]
            halves.append(np.concatenate([with_cp, data]))
        parts.append(np.concatenate(halves))
    samples = np.array(parts)
    assert samples.shape == (spec.n_t, spec.preamble_len)
    return PreambleWaveform(samples=samples, freq_grids=grids, spec=spec)


@dataclass(frozen=True)
class LocalReferences:
    """Receiver-side replicas derived from the preamble.

    c1/c2: antenna-summed data blocks of the first/second repetition pair.
    c_diff: the root-difference sequence; diff_grid is its mapping onto the
    occupied subcarriers, used by the integral CFO search.
    """

    c1: np.ndarray
    c2: np.ndarray
    c_diff: CazacSequence
    diff_grid: np.ndarray

    @property
    def energy(self) -> float:
        """Total energy of both replicas (the Algorithm-2 normalizer)."""
        return float(np.sum(np.abs(self.c1) ** 2) + np.sum(np.abs(self.c2) ** 2))


def local_references(spec: FrameSpec) -> LocalReferences:
    wave = build_preamble(spec)
    c1 = np.sum([wave.data_block(p, 1) for p in range(spec.n_t)], axis=0)
    c2 = np.sum([wave.data_block(p, 3) for p in range(spec.n_t)], axis=0)
    grids = wave.freq_grids
    diff_grid = np.sum(grids[:, 0, :] * np.conj(grids[:, 2, :]), axis=0)
    return LocalReferences(
        c1=c1, c2=c2, c_diff=difference_sequence(spec), diff_grid=diff_grid
    )
