"""Fine timing: normalized matched-filter search with a Rayleigh threshold.

The fully CFO-compensated signal is cross-correlated against the two local
replicas (one per distinct-root repetition pair); the normalized magnitude
X(n)/N(n) peaks at 1 for perfect alignment and its square root behaves as
Rayleigh noise away from the preamble. The threshold follows from the
designed false-alarm probability; up to k_peaks candidates above it are
collected and the EARLIEST one wins, which keeps the estimate on the first
arriving path even when a later path is stronger.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SampleBlock
from .frame import FrameSpec
from .preamble import LocalReferences


class FineSyncError(ValueError):
    pass


@dataclass(frozen=True)
class FineSyncConfig:
    """Detector knobs: peak count, false-alarm rate, search span, guards."""

    k_peaks: int = 3
    p_fa: float = 1e-8
    search_halfwidth: int = 128
    guard: int = 8
    # Relative floor rejecting the replica's own correlation sidelobes in
    # near-noiseless conditions; must stay below the weakest path of
    # interest (a -6 dB first tap sits at ~0.45 of the main peak).
    sidelobe_floor: float = 0.08

    def __post_init__(self):
        if self.k_peaks < 1:
            raise FineSyncError("k_peaks must be >= 1")
        if not 0.0 < self.p_fa < 1.0:
            raise FineSyncError("p_fa must be in (0, 1)")
        if self.search_halfwidth < 1 or self.guard < 0:
            raise FineSyncError("bad search_halfwidth/guard")


@dataclass
class FineSyncResult:
    sto_fine: int
    candidates: list[int]
    threshold: float
    sigma0: float
    metric_trace: np.ndarray   # X/N over offsets -hw..+hw
    offsets: np.ndarray
    degraded: bool = False


def _segment_starts(sto_coarse: int, spec: FrameSpec, n: int) -> tuple[int, int]:
    anchor = sto_coarse + spec.n_cp
    n1 = anchor + spec.n_train // 2 + n
    n2 = anchor + spec.n_train + spec.n_cp + n
    return n1, n2


def fine_metric(
    rx_dd: SampleBlock,
    sto_coarse: int,
    refs: LocalReferences,
    spec: FrameSpec,
    n: int,
) -> tuple[float, float]:
    """(X(n), N(n)) at a single candidate offset n.

    X = |R1 + R2|^2 with R1/R2 the replica correlations at the two pair
    positions; N = E * (segment energies), so X/N <= 1 with equality only
    at perfect alignment of a clean signal.
    """
    rsum = np.sum(rx_dd.samples, axis=0)
    n1, n2 = _segment_starts(sto_coarse, spec, n)
    if n1 < 0 or n2 + spec.n_fft > len(rsum):
        raise FineSyncError(f"candidate offset {n} falls outside the buffer")
    w1 = rsum[n1 : n1 + spec.n_fft]
    w2 = rsum[n2 : n2 + spec.n_fft]
    r1 = np.vdot(refs.c1, w1)
    r2 = np.vdot(refs.c2, w2)
    x_val = float(np.abs(r1 + r2) ** 2)
    n_val = float(
        refs.energy * (np.sum(np.abs(w1) ** 2) + np.sum(np.abs(w2) ** 2))
    )
    return x_val, n_val


def metric_trace(
    rx_dd: SampleBlock,
    sto_coarse: int,
    refs: LocalReferences,
    spec: FrameSpec,
    halfwidth: int,
) -> tuple[np.ndarray, np.ndarray]:
    """X/N over offsets [-halfwidth, +halfwidth], vectorized via FFT.

    Correlations against both replicas and the sliding segment energies are
    sliding dot products, so each is one full-size FFT convolution.
    """
    rsum = np.sum(rx_dd.samples, axis=0)
    offsets = np.arange(-halfwidth, halfwidth + 1)
    n1_first, n2_first = _segment_starts(sto_coarse, spec, -halfwidth)
    if n1_first < 0 or n2_first + 2 * halfwidth + spec.n_fft > len(rsum):
        raise FineSyncError("search window falls outside the buffer")

    def _corr(segment_start: int, ref: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        span = rsum[segment_start : segment_start + 2 * halfwidth + spec.n_fft]
        m = len(span)
        pad = m + spec.n_fft
        corr = np.fft.ifft(
            np.fft.fft(span, pad) * np.conj(np.fft.fft(ref, pad))
        )[: len(offsets)]
        power = np.abs(span) ** 2
        cs = np.concatenate([[0.0], np.cumsum(power)])
        energy = cs[spec.n_fft :] - cs[: -spec.n_fft]
        return corr, energy[: len(offsets)]

    r1, e1 = _corr(n1_first, refs.c1)
    r2, e2 = _corr(n2_first, refs.c2)
    x = np.abs(r1 + r2) ** 2
    n_norm = refs.energy * (e1 + e2)
    if np.any(n_norm <= 0):
        raise FineSyncError("zero-energy segment inside the search window")
    return offsets, x / n_norm


def estimate_sigma0(
    trace: np.ndarray, offsets: np.ndarray, k_peaks: int
) -> float:
    """Rayleigh scale from the trace outside the +-5K candidate interval."""
    outside = (offsets < -5 * k_peaks) | (offsets > 5 * k_peaks)
    if not outside.any():
        raise FineSyncError("no samples outside the candidate interval")
    return float(np.sqrt(2.0 / np.pi) * np.mean(np.sqrt(trace[outside])))


def threshold(p_fa: float, sigma0: float) -> float:
    """TH = sqrt(-ln(p_fa) * 2 * sigma0^2)."""
    if not 0.0 < p_fa < 1.0:
        raise FineSyncError("p_fa must be in (0, 1)")
    if sigma0 <= 0:
        raise FineSyncError("sigma0 must be positive")
    return float(np.sqrt(-np.log(p_fa) * 2.0 * sigma0 * sigma0))


def fine_sto(
    rx_dd: SampleBlock,
    sto_coarse: int,
    refs: LocalReferences,
    spec: FrameSpec,
    cfg: FineSyncConfig | None = None,
) -> FineSyncResult:
    """Run the peak-collection loop and return the earliest accepted peak.

    If no peak clears the threshold the global argmax is returned with the
    degraded flag set.
    """
    if cfg is None:
        cfg = FineSyncConfig()
    offsets, trace = metric_trace(
        rx_dd, sto_coarse, refs, spec, cfg.search_halfwidth
    )
    if trace.size == 0:
        raise FineSyncError("empty metric trace")
    sq = np.sqrt(trace)
    sigma0 = estimate_sigma0(trace, offsets, cfg.k_peaks)
    th = threshold(cfg.p_fa, sigma0)
    floor = cfg.sidelobe_floor * sq.max()
    accept = max(th, floor)

    work = trace.copy()
    candidates: list[int] = []
    for _ in range(cfg.k_peaks):
        j = int(np.argmax(work))
        if np.sqrt(work[j]) > accept:
            candidates.append(int(offsets[j]))
        lo = max(0, j - cfg.guard)
        work[lo : j + cfg.guard + 1] = -1.0
    degraded = not candidates
    pick = min(candidates) if candidates else int(offsets[int(np.argmax(trace))])
    return FineSyncResult(
        sto_fine=sto_coarse + pick,
        candidates=candidates,
        threshold=th,
        sigma0=sigma0,
        metric_trace=trace,
        offsets=offsets,
        degraded=degraded,
    )
