"""Two-stage carrier frequency offset estimation.

Stage 1 reads the fractional part from the phase of the lag-n_fft delay
correlation: every conjugate product in Lambda spans exactly n_fft samples,
so its phase is 2*pi*epsilon_frac regardless of the integer part.

Stage 2 recovers the integer part after fractional compensation. An
integer offset of q subcarrier spacings circularly shifts the occupied
spectrum by q bins, so the bin-wise product of the two distinct-root
halves, Z[k] = FFT(a)[k] * conj(FFT(b)[k]), matches the root-difference
reference grid shifted by q. The argmax of the circular correlation
between Z and the reference is mapped to an integer offset through a
calibration table built from clean synthesized preambles, which also
proves the mapping injective for the configured roots.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import SampleBlock
from .coarse import _lambda_at
from .frame import FrameSpec
from .preamble import LocalReferences, build_preamble, local_references

DEFAULT_WINDOW = 16
_SEGMENT_BACKOFF = 64   # pull the segments into CP-protected territory
_CAL_VERSION = 1


class CfoError(ValueError):
    pass


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class IntegralCfoCalibration:
    """Injective peak-shift -> integer-CFO table, tied to a frame digest."""

    shift_to_cfo: dict[int, int]
    valid_range: tuple[int, int]
    spec_digest: str

    def __post_init__(self):
        values = list(self.shift_to_cfo.values())
        if len(set(values)) != len(values):
            raise CalibrationError("shift -> CFO mapping is not injective")

    def lookup(self, shift: int) -> int:
        try:
            return self.shift_to_cfo[shift]
        except KeyError:
            raise CalibrationError(
                f"peak shift {shift} outside calibrated range {self.valid_range}"
            ) from None


@dataclass(frozen=True)
class CfoEstimate:
    """Joint estimate; total is fractional + integral by construction."""

    fractional: float
    integral: int
    peak_index: int
    metric_trace: np.ndarray

    @property
    def total(self) -> float:
        return self.fractional + self.integral


def fractional_cfo(rx: SampleBlock, sto_coarse: int, spec: FrameSpec) -> float:
    """Phase of the summed delay correlation at both repetition pairs, /2pi."""
    raw = sto_coarse + spec.coarse_anchor
    val = _lambda_at(rx.samples, raw, spec.n_fft) + _lambda_at(
        rx.samples, raw - spec.n_train, spec.n_fft
    )
    if val == 0:
        raise CfoError("delay correlation is exactly zero: phase undefined")
    return float(np.angle(val) / (2.0 * np.pi))


def compensate_cfo(rx: SampleBlock, epsilon: float, n_fft: int = 512) -> SampleBlock:
    """Rotate by exp(-j*2*pi*n*epsilon/n_fft); inverse of channel.apply_cfo."""
    n = rx.time_indices()
    rot = np.exp(-2j * np.pi * n * epsilon / n_fft)
    return SampleBlock(samples=rx.samples * rot, start_index=rx.start_index)


def _integral_metric(
    rx_prime: SampleBlock,
    sto_coarse: int,
    spec: FrameSpec,
    refs: LocalReferences,
    window: int,
) -> np.ndarray:
    """|circular correlation of Z against the reference difference grid|."""
    rsum = np.sum(rx_prime.samples, axis=0)
    anchor = sto_coarse + spec.n_cp
    pa = anchor + spec.n_train // 2 - _SEGMENT_BACKOFF
    pb = pa + spec.n_train
    if pa < 0 or pb + spec.n_fft > len(rsum):
        raise CfoError("buffer too short for the integral-stage segments")
    a = rsum[pa : pa + spec.n_fft]
    b = rsum[pb : pb + spec.n_fft]
    z = np.fft.fft(a) * np.conj(np.fft.fft(b))
    shifts = np.arange(-window, window + 1)
    return np.abs(
        [np.sum(z * np.conj(np.roll(refs.diff_grid, u))) for u in shifts]
    )


def _peak_shift(metric: np.ndarray, window: int) -> int:
    """Argmax shift; exact ties resolved toward the smallest magnitude."""
    shifts = np.arange(-window, window + 1)
    best = metric.max()
    tied = shifts[metric == best]
    return int(tied[np.argmin(np.abs(tied))])


def integral_cfo(
    rx_prime: SampleBlock,
    sto_coarse: int,
    spec: FrameSpec,
    refs: LocalReferences,
    cal: IntegralCfoCalibration,
    window: int = DEFAULT_WINDOW,
) -> tuple[int, int, np.ndarray]:
    """Integer CFO of the fractionally compensated signal.

    Returns (integral, peak_shift, metric_trace over [-window, window]).
    """
    if window > max(abs(cal.valid_range[0]), abs(cal.valid_range[1])):
        raise CalibrationError(
            f"search window {window} exceeds calibrated range {cal.valid_range}"
        )
    if cal.spec_digest != spec.digest():
        raise CalibrationError("calibration was built for a different frame spec")
    metric = _integral_metric(rx_prime, sto_coarse, spec, refs, window)
    shift = _peak_shift(metric, window)
    return cal.lookup(shift), shift, metric


def estimate_cfo(
    rx: SampleBlock,
    sto_coarse: int,
    spec: FrameSpec,
    refs: LocalReferences,
    cal: IntegralCfoCalibration,
    window: int = DEFAULT_WINDOW,
) -> tuple[CfoEstimate, SampleBlock]:
    """Full pipeline: fractional, temporary compensation, integral, final
    compensation of the ORIGINAL input by the summed estimate."""
    frac = fractional_cfo(rx, sto_coarse, spec)
    rx_prime = compensate_cfo(rx, frac, spec.n_fft)
    integral, shift, metric = integral_cfo(
        rx_prime, sto_coarse, spec, refs, cal, window
    )
    est = CfoEstimate(
        fractional=frac, integral=integral, peak_index=shift, metric_trace=metric
    )
    return est, compensate_cfo(rx, est.total, spec.n_fft)


def build_calibration(
    spec: FrameSpec,
    refs: LocalReferences | None = None,
    window: int = DEFAULT_WINDOW,
) -> IntegralCfoCalibration:
    """Measure the peak shift of every integer CFO in [-window, window] on a
    clean synthesized preamble and record the inverse mapping."""
    if refs is None:
        refs = local_references(spec)
    wave = build_preamble(spec)
    margin = spec.n_cp
    buf = np.zeros((spec.n_t, margin + spec.preamble_len + margin), dtype=complex)
    buf[:, margin : margin + spec.preamble_len] = wave.samples
    n = np.arange(buf.shape[1])
    mapping: dict[int, int] = {}
    for q in range(-window, window + 1):
        rotated = SampleBlock(buf * np.exp(2j * np.pi * n * q / spec.n_fft))
        metric = _integral_metric(rotated, margin, spec, refs, window)
        shift = _peak_shift(metric, window)
        if shift in mapping:
            raise CalibrationError(
                f"CFO {q} and {mapping[shift]} share peak shift {shift}: "
                "window too large or roots unsuitable"
            )
        mapping[shift] = q
    return IntegralCfoCalibration(
        shift_to_cfo=mapping,
        valid_range=(-window, window),
        spec_digest=spec.digest(),
    )


def save_calibration(cal: IntegralCfoCalibration, path: str | Path) -> None:
    """Versioned text table: header lines, then 'shift cfo' pairs."""
    lines = [
        f"version {_CAL_VERSION}",
        f"spec {cal.spec_digest}",
        f"range {cal.valid_range[0]} {cal.valid_range[1]}",
    ]
    for shift in sorted(cal.shift_to_cfo):
        lines.append(f"{shift} {cal.shift_to_cfo[shift]}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_calibration(path: str | Path, spec: FrameSpec) -> IntegralCfoCalibration:
    """Load and re-verify a persisted table against the frame spec digest."""
    lines = Path(path).read_text().splitlines()
    try:
        version = int(lines[0].split()[1])
        digest = lines[1].split()[1]
        lo, hi = (int(t) for t in lines[2].split()[1:3])
        mapping = {}
        for line in lines[3:]:
            if not line.strip():
                continue
            shift, cfo = (int(t) for t in line.split())
            mapping[shift] = cfo
    except (IndexError, ValueError) as exc:
        raise CalibrationError(f"malformed calibration file {path}: {exc}") from exc
    if version != _CAL_VERSION:
        raise CalibrationError(f"unsupported calibration version {version}")
    if digest != spec.digest():
        raise CalibrationError(
            "calibration digest does not match the current frame spec"
        )
    return IntegralCfoCalibration(
        shift_to_cfo=mapping, valid_range=(lo, hi), spec_digest=digest
    )
