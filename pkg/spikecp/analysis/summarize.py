"""
Summarize experiment and sweep reports.

Reads report.csv files (or a sweep CSV) and renders the aggregate table
plus a few key insights: the reliability verdict of every row and the row
with the lowest latency that still meets its target.
"""

from pathlib import Path

import pandas as pd

from spikecp.errors import ParseError

DISPLAY_COLUMNS = [
    "parameter",
    "value",
    "policy",
    "p_targ",
    "i_th",
    "n_checkpoints",
    "n_cal",
    "coverage_mean",
    "coverage_lo",
    "coverage_hi",
    "reliability_gap_mean",
    "normalized_latency_mean",
    "normalized_energy_mean",
    "normalized_set_size_mean",
]

# Monte Carlo slack allowed before a row is flagged as under-covering
COVERAGE_SLACK = 0.015


def load_report(path):
    """Read a report.csv, a sweep CSV, or the report.csv inside an experiment directory."""
    path = Path(path)
    if path.is_dir():
        path = path / "report.csv"
    if not path.exists():
        raise ParseError("Report not found", path=path)
    frame = pd.read_csv(path)
    missing = {"coverage_mean", "reliability_gap_mean"} - set(frame.columns)
    if missing:
        raise ParseError(f"Not a report file, missing {sorted(missing)}", path=path)
    return frame


def reliability_verdict(row, slack=COVERAGE_SLACK):
    if row["reliability_gap_mean"] <= 0:
        return "reliable"
    if row["reliability_gap_mean"] <= slack:
        return "within Monte Carlo slack"
    return "UNDER-COVERING"


def summarize_report(path, title="SpikeCP Experiment Summary"):
    """Human-readable summary of a report as a string."""
    frame = load_report(path)
    lines = ["=" * 60, title, "=" * 60, ""]
    columns = [c for c in DISPLAY_COLUMNS if c in frame.columns]
    lines.append(frame[columns].to_string(index=False, float_format=lambda v: f"{v:.4f}"))

    lines += ["", "=" * 60, "Key Insights", "=" * 60, ""]
    for _, row in frame.iterrows():
        label = row["policy"] if "value" not in frame.columns else f"{row['parameter']}={row['value']}"
        lines.append(f"{label}: coverage {row['coverage_mean']:.4f} vs target {row['p_targ']:.2f} ({reliability_verdict(row)})")

    meets = frame[frame["reliability_gap_mean"] <= 0]
    if len(meets) and "normalized_latency_mean" in frame.columns:
        best = meets.loc[meets["normalized_latency_mean"].idxmin()]
        label = best["policy"] if "value" not in frame.columns else f"{best['parameter']}={best['value']}"
        lines.append(f"\nLowest latency meeting the target: {label} ({best['normalized_latency_mean']:.3f} of T)")
    lines.append("\n" + "=" * 60)
    return "\n".join(lines)
