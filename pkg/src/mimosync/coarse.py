"""Coarse preamble detection via delay correlation with a 2*n_cp moving average.

Lambda(n) correlates the received stream against itself at lag n_fft; P(n)
is the matching sliding energy. The decision metric sums, over a 2*n_cp
window, the per-offset ratio

    (|Lambda(n - n_train + m)|^2 + |Lambda(n + m)|^2)
    -------------------------------------------------
      sum of the four matching P(.)^2 terms

which couples both repetition pairs of the preamble (they sit n_train
apart) and is invariant to input scaling, so no absolute threshold is
needed. The returned start estimate subtracts the fixed plateau offset so
it points at the first preamble sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SampleBlock
from .frame import FrameSpec

_DEN_FLOOR = 1e-300


class CoarseSyncError(ValueError):
    pass


def lambda_metric(rx: SampleBlock, n: int, n_fft: int = 512) -> complex:
    """Lambda(n) = sum_{i=n-(N-1)}^{n} sum_q r_q*(i - N) r_q(i), N = n_fft."""
    return _lambda_at(rx.samples, n, n_fft)


def _lambda_at(samples: np.ndarray, n: int, n_fft: int) -> complex:
    if n < 2 * n_fft - 1:
        raise CoarseSyncError(f"need {2 * n_fft - 1} samples of history, n={n}")
    if n >= samples.shape[1]:
        raise CoarseSyncError("index beyond buffer")
    late = samples[:, n - n_fft + 1 : n + 1]
    early = samples[:, n - 2 * n_fft + 1 : n - n_fft + 1]
    return complex(np.sum(np.conj(early) * late))


def power_metric(rx: SampleBlock, n: int, n_fft: int = 512) -> float:
    """P(n) = sum_{i=n-(N-1)}^{n} sum_q |r_q(i)|^2."""
    if n < n_fft - 1:
        raise CoarseSyncError(f"need {n_fft - 1} samples of history, n={n}")
    if n >= rx.samples.shape[1]:
        raise CoarseSyncError("index beyond buffer")
    return float(np.sum(np.abs(rx.samples[:, n - n_fft + 1 : n + 1]) ** 2))


@dataclass
class CoarseMetricTrace:
    """Full diagnostic traces plus the anchored start estimate."""

    metric: np.ndarray         # moving-average metric, indexed by absolute n
    lambda_trace: np.ndarray   # Lambda(n), absolute indexing (zero-padded head)
    power_trace: np.ndarray    # P(n), absolute indexing
    argmax: int                # estimated preamble start (anchor removed)
    raw_argmax: int            # argmax of the metric itself
    first_valid: int           # first absolute n with a defined metric value


def _sliding_traces(samples: np.ndarray, n_fft: int):
    """Vectorized Lambda and P over the whole buffer via cumulative sums."""
    n_total = samples.shape[1]
    lam = np.zeros(n_total, dtype=complex)
    pw = np.zeros(n_total)
    if n_total >= 2 * n_fft:
        z = np.sum(np.conj(samples[:, :-n_fft]) * samples[:, n_fft:], axis=0)
        cz = np.concatenate([[0.0 + 0.0j], np.cumsum(z)])
        lam[2 * n_fft - 1 :] = cz[n_fft:] - cz[:-n_fft]
    if n_total >= n_fft:
        p2 = np.sum(np.abs(samples) ** 2, axis=0)
        cp = np.concatenate([[0.0], np.cumsum(p2)])
        pw[n_fft - 1 :] = cp[n_fft:] - cp[:-n_fft]
    return lam, pw


def coarse_sto(
    rx: SampleBlock,
    spec: FrameSpec,
    search: tuple[int, int] | None = None,
) -> CoarseMetricTrace:
    """Locate the preamble start in the buffer.

    search, when given, is an (inclusive, exclusive) range of candidate
    start positions relative to the buffer head.
    """
    samples = rx.samples
    n_fft, n_cp, n_train = spec.n_fft, spec.n_cp, spec.n_train
    n_total = samples.shape[1]
    if not np.any(samples):
        raise CoarseSyncError("all-zero input: metric undefined")
    lam, pw = _sliding_traces(samples, n_fft)

    n0 = 2 * n_fft - 1 + n_train  # first n where both pair terms have history
    if n_total <= n0 + 2 * n_cp:
        raise CoarseSyncError("buffer too short for the coarse search")
    num = np.abs(lam[n0:]) ** 2 + np.abs(lam[n0 - n_train : n_total - n_train]) ** 2
    den = (
        pw[n0 - n_train - n_fft : n_total - n_train - n_fft] ** 2
        + pw[n0 - n_train : n_total - n_train] ** 2
        + pw[n0 - n_fft : n_total - n_fft] ** 2
        + pw[n0:] ** 2
    )
    ratio = num / np.where(den == 0.0, _DEN_FLOOR, den)
    cr = np.concatenate([[0.0], np.cumsum(ratio)])
    msum = cr[2 * n_cp :] - cr[: -2 * n_cp]      # metric at n = n0 + k + n_cp
    cn = np.concatenate([[0.0], np.cumsum(num)])
    esum = cn[2 * n_cp :] - cn[: -2 * n_cp]      # summed |Lambda|^2, same indexing

    metric = np.full(n_total, np.nan)
    first_valid = n0 + n_cp
    metric[first_valid : first_valid + len(msum)] = msum
    energy = np.zeros(n_total)
    energy[first_valid : first_valid + len(esum)] = esum

    anchor = spec.coarse_anchor
    lo, hi = 0, n_total
    if search is not None:
        lo = max(0, search[0] + anchor)
        hi = min(n_total, search[1] + anchor)
    window = metric[lo:hi]
    if window.size == 0 or not np.any(np.isfinite(window)):
        raise CoarseSyncError("empty coarse search range")
    raw = lo + int(np.nanargmax(window))

    # The ratio metric nearly ties at +-n_train when the preamble is preceded
    # by silence; the summed correlation energy separates the true position.
    cands = [c for c in (raw - n_train, raw, raw + n_train) if lo <= c < hi]
    raw = max(cands, key=lambda c: energy[c])

    return CoarseMetricTrace(
        metric=metric,
        lambda_trace=lam,
        power_trace=pw,
        argmax=raw - anchor,
        raw_argmax=raw,
        first_valid=first_valid,
    )
