"""Render campaign summary figures next to the CSV outputs."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


class ReportError(ValueError):
    pass


def _load_summary(summary_csv: str | Path) -> list[dict[str, float]]:
    with open(summary_csv, newline="") as fh:
        rows = [
            {k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)
        ]
    if not rows:
        raise ReportError(f"no summary rows in {summary_csv}")
    return sorted(rows, key=lambda r: r["snr_db"])


def render_report(summary_csv: str | Path, out_dir: str | Path) -> list[Path]:
    """Plot timing-error quantiles and CFO MSE vs SNR; returns figure paths."""
    rows = _load_summary(summary_csv)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snr = [r["snr_db"] for r in rows]
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    for key, style in (("timing_p5", ":"), ("timing_p50", "-"), ("timing_p95", "--")):
        ax.plot(snr, [r[key] for r in rows], style, marker="o", label=key)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("timing error (samples)")
    ax.legend()
    ax.grid(True, alpha=0.4)
    path = out / "timing_error.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(snr, [max(r["cfo_mse"], 1e-12) for r in rows], marker="s")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("CFO MSE (subcarrier spacings$^2$)")
    ax.grid(True, which="both", alpha=0.4)
    path = out / "cfo_mse.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)
    return paths
