"""Preamble-based timing and carrier-frequency synchronization for
two-antenna OFDM links, with a fading-channel simulator and a seeded
Monte-Carlo evaluation harness."""

__version__ = "0.1.0"

from .cfo import (
    CfoEstimate,
    IntegralCfoCalibration,
    build_calibration,
    compensate_cfo,
    estimate_cfo,
    fractional_cfo,
    integral_cfo,
    load_calibration,
    save_calibration,
)
from .channel import (
    ChannelRealization,
    SampleBlock,
    TapProfile,
    add_awgn,
    apply_cfo,
    apply_channel,
    doppler_normalized,
    generate_channel,
    single_path_profile,
    two_path_profile,
    vehicular_a_profile,
)
from .coarse import CoarseMetricTrace, coarse_sto, lambda_metric, power_metric
from .fine import (
    FineSyncConfig,
    FineSyncResult,
    estimate_sigma0,
    fine_metric,
    fine_sto,
    threshold,
)
from .frame import FrameSpec, FrameSpecError
from .harness import (
    CampaignConfig,
    CampaignContext,
    TrialRecord,
    run_campaign,
    run_trial,
    summarize,
)
from .iqio import read_iq, write_iq
from .preamble import (
    CazacSequence,
    LocalReferences,
    PreambleWaveform,
    build_preamble,
    difference_sequence,
    local_references,
    ofdm_modulate,
    zadoff_chu,
)

__all__ = [name for name in dir() if not name.startswith("_")]
