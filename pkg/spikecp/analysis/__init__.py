"""Experiment harness: trials, sweeps, metrics and report summaries."""

from spikecp.analysis.harness import (
    MetricsReport,
    calibrate_and_infer,
    run_experiment,
    run_trials,
    sweep,
    sweep_frame,
    write_sweep,
)
from spikecp.analysis.summarize import summarize_report

__all__ = [
    "MetricsReport",
    "calibrate_and_infer",
    "run_experiment",
    "run_trials",
    "summarize_report",
    "sweep",
    "sweep_frame",
    "write_sweep",
]
