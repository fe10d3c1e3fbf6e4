"""Seeded Monte-Carlo campaign runner.

Each trial composes preamble -> channel -> CFO -> noise -> the three-stage
synchronizer and records timing and CFO errors. All randomness flows from
(master_seed, SNR index, trial index) through a splittable seed tree, so
campaigns are reproducible bit-for-bit and trials can run in any order,
serial or parallel.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cfo import (
    CalibrationError,
    CfoError,
    IntegralCfoCalibration,
    build_calibration,
    estimate_cfo,
)
from .channel import (
    SampleBlock,
    add_awgn,
    apply_cfo,
    apply_channel,
    doppler_normalized,
    generate_channel,
    single_path_profile,
    two_path_profile,
    vehicular_a_profile,
)
from .coarse import CoarseSyncError, coarse_sto
from .fine import FineSyncConfig, FineSyncError, fine_sto
from .frame import FrameSpec
from .preamble import LocalReferences, build_preamble, local_references

CHANNEL_KINDS = ("awgn_only", "single_path", "two_path_weak_first", "vehicular_a")
_TAIL_PAD = 600   # silent samples after the preamble so every window fits

RECORD_FIELDS = (
    "seed",
    "snr_db",
    "true_sto",
    "sto_coarse",
    "sto_fine",
    "timing_error_samples",
    "true_cfo",
    "est_cfo",
    "cfo_error",
    "degraded_flag",
    "integral_fail_flag",
)

SUMMARY_FIELDS = (
    "snr_db",
    "trials",
    "timing_p5",
    "timing_p50",
    "timing_p95",
    "timing_rmse",
    "cfo_mse",
    "lock_rate",
    "degraded_count",
    "failed_count",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    """Full description of a Monte-Carlo experiment."""

    snr_db_list: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    trials_per_snr: int = 100
    true_cfo: float = 7.55
    channel_kind: str = "vehicular_a"
    speed_kmh: float = 120.0
    carrier_hz: float = 2e9
    bandwidth_hz: float = 8e6
    master_seed: int = 1
    payload_gap: int = 2000
    cfo_window: int = 16
    spec: FrameSpec = field(default_factory=FrameSpec)
    fine_cfg: FineSyncConfig = field(default_factory=FineSyncConfig)

    def __post_init__(self):
        if self.trials_per_snr < 1:
            raise ConfigError("trials_per_snr must be >= 1")
        if not self.snr_db_list:
            raise ConfigError("need at least one SNR point")
        for s in self.snr_db_list:
            if not (math.isfinite(s) or s == math.inf):
                raise ConfigError(f"bad SNR value {s}")
        if self.channel_kind not in CHANNEL_KINDS:
            raise ConfigError(
                f"channel_kind must be one of {CHANNEL_KINDS}, got {self.channel_kind!r}"
            )
        if self.payload_gap < 2 * self.spec.n_cp:
            raise ConfigError("payload_gap too small for the coarse search")
        if self.bandwidth_hz <= 0 or self.carrier_hz <= 0 or self.speed_kmh < 0:
            raise ConfigError("bad speed/carrier/bandwidth")


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    snr_db: float
    true_sto: int
    sto_coarse: int
    sto_fine: int
    timing_error_samples: int
    true_cfo: float
    est_cfo: float
    cfo_error: float
    degraded_flag: bool
    integral_fail_flag: bool


@dataclass(frozen=True)
class CampaignContext:
    """Immutable per-campaign inputs shared by all trials."""

    preamble: np.ndarray          # (n_t, 2*n_train)
    refs: LocalReferences
    cal: IntegralCfoCalibration

    @classmethod
    def build(cls, cfg: CampaignConfig) -> "CampaignContext":
        refs = local_references(cfg.spec)
        return cls(
            preamble=build_preamble(cfg.spec).samples,
            refs=refs,
            cal=build_calibration(cfg.spec, refs, cfg.cfo_window),
        )


def _trial_seeds(cfg: CampaignConfig, snr_index: int, trial_index: int):
    ss = np.random.SeedSequence(
        entropy=cfg.master_seed, spawn_key=(snr_index, trial_index)
    )
    place, channel, noise = ss.spawn(3)
    return (
        int(ss.generate_state(1)[0]),
        np.random.default_rng(place),
        int(channel.generate_state(1)[0]),
        int(noise.generate_state(1)[0]),
    )


def _channel_profile(cfg: CampaignConfig):
    """(profile, doppler_norm) for the fading kinds, None for awgn_only."""
    if cfg.channel_kind == "awgn_only":
        return None
    if cfg.channel_kind == "single_path":
        return single_path_profile(), 0.0
    if cfg.channel_kind == "two_path_weak_first":
        return two_path_profile(), 0.0
    return (
        vehicular_a_profile(cfg.bandwidth_hz),
        doppler_normalized(cfg.speed_kmh, cfg.carrier_hz, cfg.bandwidth_hz),
    )


def run_trial(
    cfg: CampaignConfig,
    snr_db: float,
    trial_index: int,
    ctx: CampaignContext | None = None,
    details: dict | None = None,
) -> TrialRecord:
    """One deterministic end-to-end trial.

    When a details dict is supplied, intermediate metrics (coarse argmax,
    fractional/integral split, threshold, accepted peaks) are written into
    it for diagnostic display.
    """
    if ctx is None:
        ctx = CampaignContext.build(cfg)
    snr_index = cfg.snr_db_list.index(snr_db)
    seed, place_rng, channel_seed, noise_seed = _trial_seeds(
        cfg, snr_index, trial_index
    )
    spec = cfg.spec
    gap = cfg.payload_gap
    true_sto = int(place_rng.integers(3 * gap // 4, 5 * gap // 4 + 1))

    prof = _channel_profile(cfg)
    tx = SampleBlock(samples=ctx.preamble.copy(), start_index=true_sto)
    if prof is None:
        faded = tx
    else:
        profile, doppler = prof
        ch = generate_channel(
            profile,
            doppler,
            spec.n_t,
            spec.n_r,
            duration=spec.preamble_len + profile.max_delay,
            seed=channel_seed,
        )
        faded = apply_channel(tx, ch)

    n_total = true_sto + len(faded) + _TAIL_PAD
    buf = np.zeros((faded.antennas, n_total), dtype=complex)
    buf[:, true_sto : true_sto + len(faded)] = faded.samples
    rx = apply_cfo(SampleBlock(samples=buf), cfg.true_cfo, spec.n_fft)
    rx = add_awgn(rx, snr_db, noise_seed)

    degraded = False
    failed = False
    sto_c = sto_f = 0
    est_total = math.nan
    try:
        trace = coarse_sto(rx, spec)
        sto_c = trace.argmax
        est, rx_dd = estimate_cfo(
            rx, sto_c, spec, ctx.refs, ctx.cal, cfg.cfo_window
        )
        est_total = est.total
        fres = fine_sto(rx_dd, sto_c, ctx.refs, spec, cfg.fine_cfg)
        sto_f = fres.sto_fine
        degraded = fres.degraded
        if details is not None:
            details.update(
                coarse_raw_argmax=trace.raw_argmax,
                sto_coarse=sto_c,
                cfo_fractional=est.fractional,
                cfo_integral=est.integral,
                cfo_peak_shift=est.peak_index,
                fine_sigma0=fres.sigma0,
                fine_threshold=fres.threshold,
                fine_candidates=fres.candidates,
                fine_degraded=fres.degraded,
                trace_coarse_metric=trace.metric,
                trace_cfo_metric=est.metric_trace,
                trace_fine_offsets=fres.offsets,
                trace_fine_metric=fres.metric_trace,
            )
    except (CalibrationError, CfoError, CoarseSyncError, FineSyncError) as exc:
        failed = True
        sto_f = sto_c
        if details is not None:
            details["error"] = str(exc)

    cfo_err = est_total - cfg.true_cfo if math.isfinite(est_total) else math.nan
    return TrialRecord(
        seed=seed,
        snr_db=snr_db,
        true_sto=true_sto,
        sto_coarse=sto_c,
        sto_fine=sto_f,
        timing_error_samples=sto_f - true_sto,
        true_cfo=cfg.true_cfo,
        est_cfo=est_total,
        cfo_error=cfo_err,
        degraded_flag=degraded,
        integral_fail_flag=failed,
    )


def summarize(records: list[TrialRecord]) -> list[dict]:
    """Per-SNR aggregate rows, ordered as the records' SNR first occurs."""
    by_snr: dict[float, list[TrialRecord]] = {}
    for rec in records:
        by_snr.setdefault(rec.snr_db, []).append(rec)
    rows = []
    for snr, recs in by_snr.items():
        terr = np.array([r.timing_error_samples for r in recs], dtype=float)
        ok = [r for r in recs if not r.integral_fail_flag]
        cerr = np.array([r.cfo_error for r in ok], dtype=float)
        rows.append(
            {
                "snr_db": snr,
                "trials": len(recs),
                "timing_p5": float(np.percentile(terr, 5)),
                "timing_p50": float(np.percentile(terr, 50)),
                "timing_p95": float(np.percentile(terr, 95)),
                "timing_rmse": float(np.sqrt(np.mean(terr**2))),
                "cfo_mse": float(np.mean(cerr**2)) if len(cerr) else math.nan,
                "lock_rate": float(np.mean(np.abs(terr) <= 2)),
                "degraded_count": sum(r.degraded_flag for r in recs),
                "failed_count": sum(r.integral_fail_flag for r in recs),
            }
        )
    return rows


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


_WORKER_STATE: dict = {}


def _worker_init(cfg: CampaignConfig) -> None:
    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["ctx"] = CampaignContext.build(cfg)


def _worker_trial(args: tuple[float, int]) -> TrialRecord:
    snr_db, trial_index = args
    return run_trial(_WORKER_STATE["cfg"], snr_db, trial_index, _WORKER_STATE["ctx"])


def run_campaign(
    cfg: CampaignConfig, out_dir: str | Path, workers: int = 1
) -> tuple[Path, Path, Path]:
    """Run every (SNR, trial) pair; write records/summary CSVs and a manifest.

    Returns the three output paths. Output bytes depend only on cfg.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records_path = out / "records.csv"
    summary_path = out / "summary.csv"
    manifest_path = out / "manifest.txt"
    for p in (records_path, summary_path, manifest_path):
        p.touch()   # fail on unwritable paths before any trial runs

    ctx = None
    tasks = [
        (snr, t) for snr in cfg.snr_db_list for t in range(cfg.trials_per_snr)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(
            max_workers=workers, initializer=_worker_init, initargs=(cfg,)
        ) as pool:
            records = list(pool.map(_worker_trial, tasks, chunksize=16))
    else:
        ctx = CampaignContext.build(cfg)
        records = [run_trial(cfg, snr, t, ctx) for snr, t in tasks]

    with open(records_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS + ("method",))
        for rec in records:
            writer.writerow(
                [_fmt(getattr(rec, f)) for f in RECORD_FIELDS] + ["proposed"]
            )
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_FIELDS)
        for row in summarize(records):
            writer.writerow([_fmt(row[f]) for f in SUMMARY_FIELDS])
    if ctx is None:
        ctx = CampaignContext.build(cfg)
    manifest_path.write_text(render_manifest(cfg, ctx))
    return records_path, summary_path, manifest_path


def render_manifest(cfg: CampaignConfig, ctx: CampaignContext) -> str:
    """Human-readable key = value dump; parseable back into a config."""
    spec, fine = cfg.spec, cfg.fine_cfg
    pairs = [
        ("version", __version__),
        ("calibration_digest", ctx.cal.spec_digest),
        ("campaign.snr_db_list", ",".join(_fmt(s) for s in cfg.snr_db_list)),
        ("campaign.trials_per_snr", cfg.trials_per_snr),
        ("campaign.true_cfo", cfg.true_cfo),
        ("campaign.channel_kind", cfg.channel_kind),
        ("campaign.speed_kmh", cfg.speed_kmh),
        ("campaign.carrier_hz", cfg.carrier_hz),
        ("campaign.bandwidth_hz", cfg.bandwidth_hz),
        ("campaign.master_seed", cfg.master_seed),
        ("campaign.payload_gap", cfg.payload_gap),
        ("campaign.cfo_window", cfg.cfo_window),
        ("frame.n_fft", spec.n_fft),
        ("frame.n_cp", spec.n_cp),
        ("frame.n_t", spec.n_t),
        ("frame.n_r", spec.n_r),
        ("frame.mu1", spec.mu1),
        ("frame.mu2", spec.mu2),
        ("frame.n_mu", spec.n_mu),
        ("fine.k_peaks", fine.k_peaks),
        ("fine.p_fa", fine.p_fa),
        ("fine.search_halfwidth", fine.search_halfwidth),
        ("fine.guard", fine.guard),
        ("fine.sidelobe_floor", fine.sidelobe_floor),
    ]
    return "\n".join(f"{k} = {_fmt(v)}" for k, v in pairs) + "\n"


def config_from_manifest(path: str | Path) -> CampaignConfig:
    """Rebuild the exact CampaignConfig a manifest was written from."""
    values: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    try:
        spec = FrameSpec(
            n_fft=int(values["frame.n_fft"]),
            n_cp=int(values["frame.n_cp"]),
            n_t=int(values["frame.n_t"]),
            n_r=int(values["frame.n_r"]),
            mu1=int(values["frame.mu1"]),
            mu2=int(values["frame.mu2"]),
            n_mu=int(values["frame.n_mu"]),
        )
        fine = FineSyncConfig(
            k_peaks=int(values["fine.k_peaks"]),
            p_fa=float(values["fine.p_fa"]),
            search_halfwidth=int(values["fine.search_halfwidth"]),
            guard=int(values["fine.guard"]),
            sidelobe_floor=float(values["fine.sidelobe_floor"]),
        )
        return CampaignConfig(
            snr_db_list=tuple(
                float(s) for s in values["campaign.snr_db_list"].split(",")
            ),
            trials_per_snr=int(values["campaign.trials_per_snr"]),
            true_cfo=float(values["campaign.true_cfo"]),
            channel_kind=values["campaign.channel_kind"],
            speed_kmh=float(values["campaign.speed_kmh"]),
            carrier_hz=float(values["campaign.carrier_hz"]),
            bandwidth_hz=float(values["campaign.bandwidth_hz"]),
            master_seed=int(values["campaign.master_seed"]),
            payload_gap=int(values["campaign.payload_gap"]),
            cfo_window=int(values["campaign.cfo_window"]),
            spec=spec,
            fine_cfg=fine,
        )
    except KeyError as exc:
        raise ConfigError(f"manifest missing key {exc}") from exc
