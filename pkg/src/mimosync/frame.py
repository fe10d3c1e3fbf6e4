"""Frame and preamble constants shared by every processing stage."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field


class FrameSpecError(ValueError):
    """Raised when frame parameters are inconsistent."""


def _default_band(n_fft: int, n_mu: int) -> tuple[int, ...]:
    """Occupied subcarriers: 2*n_mu indices centered on DC, DC itself skipped.

    Returned in FFT-bin order: positive band 1..n_mu, then the negative band
    n_fft-n_mu..n_fft-1. Everything else (DC and the outer band) is virtual.
    """
    pos = list(range(1, n_mu + 1))
    neg = list(range(n_fft - n_mu, n_fft))
    return tuple(sorted(pos + neg))


@dataclass(frozen=True)
class FrameSpec:
    """Immutable container for all frame/preamble constants.

    The preamble is four FFT blocks long: two repetition pairs, each pair
    spanning n_train = 2*(n_fft + n_cp) samples. Transmit antenna 1 occupies
    the even occupied subcarriers, antenna 2 the odd ones.
    """

    n_fft: int = 512
    n_cp: int = 128
    n_t: int = 2
    n_r: int = 2
    mu1: int = 1
    mu2: int = 5
    n_mu: int = 204
    used_subcarriers: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.n_fft < 4 or self.n_cp < 0 or self.n_cp > self.n_fft:
            raise FrameSpecError(f"bad n_fft/n_cp: {self.n_fft}/{self.n_cp}")
        if self.n_t != 2:
            raise FrameSpecError("preamble structure is defined for 2 TX antennas")
        if self.n_r < 1:
            raise FrameSpecError("need at least one RX antenna")
        if self.n_mu < 2:
            raise FrameSpecError("n_mu must be >= 2")
        if math.gcd(self.mu1, self.n_mu) != 1 or math.gcd(self.mu2, self.n_mu) != 1:
            raise FrameSpecError(
                f"roots ({self.mu1}, {self.mu2}) must be coprime to n_mu={self.n_mu}"
            )
        if self.mu1 % self.n_mu == self.mu2 % self.n_mu:
            raise FrameSpecError("mu1 and mu2 must differ")
        if not self.used_subcarriers:
            object.__setattr__(
                self, "used_subcarriers", _default_band(self.n_fft, self.n_mu)
            )
        used = self.used_subcarriers
        if len(used) != 2 * self.n_mu:
            raise FrameSpecError(
                f"{len(used)} occupied subcarriers, expected {2 * self.n_mu}"
            )
        if 0 in used:
            raise FrameSpecError("DC subcarrier must stay unoccupied")
        if len(set(used)) != len(used):
            raise FrameSpecError("duplicate subcarrier indices")
        if any(k < 0 or k >= self.n_fft for k in used):
            raise FrameSpecError("subcarrier index out of range")
        n_even = sum(1 for k in used if k % 2 == 0)
        if n_even != self.n_mu:
            raise FrameSpecError(
                "occupied band must split evenly between even and odd subcarriers"
            )

    @property
    def n_train(self) -> int:
        return 2 * (self.n_fft + self.n_cp)

    @property
    def preamble_len(self) -> int:
        return 2 * self.n_train

    @property
    def even_subcarriers(self) -> tuple[int, ...]:
        return tuple(k for k in self.used_subcarriers if k % 2 == 0)

    @property
    def odd_subcarriers(self) -> tuple[int, ...]:
        return tuple(k for k in self.used_subcarriers if k % 2 == 1)

    @property
    def coarse_anchor(self) -> int:
        """Offset of the coarse-metric argmax from the true preamble start
        for an ideal single-path channel (plateau center, first occurrence)."""
        return 2 * self.n_fft - 1 + self.n_train + self.n_cp

    def digest(self) -> str:
        """Stable hash of every constant that affects waveforms and metrics."""
        payload = (
            f"v1|{self.n_fft}|{self.n_cp}|{self.n_t}|{self.n_r}"
            f"|{self.mu1}|{self.mu2}|{self.n_mu}|{','.join(map(str, self.used_subcarriers))}"
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]
