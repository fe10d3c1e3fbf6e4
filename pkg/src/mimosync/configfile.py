"""INI-style campaign configuration files.

Three sections, all optional, every key optional (defaults apply):

    [campaign]
    snr_db_list = 0,5,10,15,20      ; "inf" disables noise
    trials_per_snr = 100
    true_cfo = 7.55
    channel_kind = vehicular_a      ; awgn_only | single_path |
                                    ; two_path_weak_first | vehicular_a
    speed_kmh = 120
    carrier_hz = 2e9
    bandwidth_hz = 8e6
    master_seed = 1
    payload_gap = 2000
    cfo_window = 16

    [frame]
    n_fft = 512
    n_cp = 128
    n_t = 2
    n_r = 2
    mu1 = 1
    mu2 = 5
    n_mu = 204

    [fine]
    k_peaks = 3
    p_fa = 1e-8
    search_halfwidth = 128
    guard = 8
    sidelobe_floor = 0.08

Unknown sections or keys are errors, so typos never silently fall back to
defaults.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .fine import FineSyncConfig
from .frame import FrameSpec
from .harness import CampaignConfig, ConfigError

_SCHEMA: dict[str, dict[str, type]] = {
    "campaign": {
        "snr_db_list": str,
        "trials_per_snr": int,
        "true_cfo": float,
        "channel_kind": str,
        "speed_kmh": float,
        "carrier_hz": float,
        "bandwidth_hz": float,
        "master_seed": int,
        "payload_gap": int,
        "cfo_window": int,
    },
    "frame": {
        "n_fft": int,
        "n_cp": int,
        "n_t": int,
        "n_r": int,
        "mu1": int,
        "mu2": int,
        "n_mu": int,
    },
    "fine": {
        "k_peaks": int,
        "p_fa": float,
        "search_halfwidth": int,
        "guard": int,
        "sidelobe_floor": float,
    },
}


def _parse_sections(path: str | Path) -> dict[str, dict]:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    text = Path(path).read_text()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    out: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            schema = _SCHEMA[section]
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            try:
                out[section][key] = schema[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
    return out


def load_config(path: str | Path) -> CampaignConfig:
    """Parse a config file into a fully validated CampaignConfig."""
    sections = _parse_sections(path)
    campaign = dict(sections.get("campaign", {}))
    if "snr_db_list" in campaign:
        try:
            campaign["snr_db_list"] = tuple(
                float(tok) for tok in campaign["snr_db_list"].split(",") if tok.strip()
            )
        except ValueError as exc:
            raise ConfigError(f"bad snr_db_list: {exc}") from exc
    try:
        spec = FrameSpec(**sections.get("frame", {}))
        fine = FineSyncConfig(**sections.get("fine", {}))
        return CampaignConfig(spec=spec, fine_cfg=fine, **campaign)
    except ValueError as exc:   # FrameSpecError / FineSyncError / ConfigError
        raise ConfigError(str(exc)) from exc
