"""
Per-trial metrics and their aggregation across calibration draws.

Every per-trial metric is the mean of a per-input quantity, so recomputing it
from per_input.csv reproduces per_trial.csv. Aggregates are the mean across
trials plus the empirical 2.5% / 97.5% quantiles (the interval covering 95%
of the realised values).
"""

import numpy as np
import pandas as pd

METRICS = (
    "coverage",
    "reliability_gap",
    "normalized_latency",
    "normalized_energy",
    "normalized_set_size",
    "mean_stop_time",
    "mean_energy",
    "mean_set_size",
)

INTERVAL = (0.025, 0.975)


def trial_metrics(decisions, labels, p_targ, T, n_classes, hidden_count):
    """Coverage (or accuracy), reliability gap, and normalised latency, energy and set size."""
    covered = decisions.covered(labels)
    coverage = float(np.mean(covered))
    mean_stop = float(np.mean(decisions.stop_times))
    mean_energy = float(np.mean(decisions.energies))
    mean_size = float(np.mean(decisions.set_sizes))
    return {
        "n_test": int(len(decisions)),
        "coverage": coverage,
        "reliability_gap": float(p_targ) - coverage,
        "normalized_latency": mean_stop / T,
        "normalized_energy": mean_energy / (hidden_count * T) if hidden_count else 0.0,
        "normalized_set_size": mean_size / n_classes,
        "mean_stop_time": mean_stop,
        "mean_energy": mean_energy,
        "mean_set_size": mean_size,
    }


def aggregate(per_trial, p_targ):
    """One-row summary: mean and 95% empirical interval of every metric across trials."""
    summary = {"n_trials": int(len(per_trial))}
    for metric in METRICS:
        values = per_trial[metric].to_numpy(dtype=np.float64)
        summary[f"{metric}_mean"] = float(values.mean())
        summary[f"{metric}_lo"] = float(np.quantile(values, INTERVAL[0]))
        summary[f"{metric}_hi"] = float(np.quantile(values, INTERVAL[1]))
    # the gap of the mean, so gap = p_targ - coverage holds exactly for the aggregate too
    summary["reliability_gap_mean"] = float(p_targ) - summary["coverage_mean"]
    return summary


def recompute_per_trial(per_input, T, n_classes, hidden_count):
    """Per-trial coverage, latency, energy and set size rebuilt from per-input rows."""
    grouped = per_input.groupby("trial", sort=True)
    frame = pd.DataFrame(
        {
            "coverage": grouped["covered"].mean(),
            "mean_stop_time": grouped["stop_time"].mean(),
            "mean_energy": grouped["energy"].mean(),
        }
    )
    sizes = per_input["set_size"].fillna(1.0)
    frame["mean_set_size"] = sizes.groupby(per_input["trial"], sort=True).mean()
    frame["normalized_latency"] = frame["mean_stop_time"] / T
    frame["normalized_energy"] = frame["mean_energy"] / (hidden_count * T) if hidden_count else 0.0
    frame["normalized_set_size"] = frame["mean_set_size"] / n_classes
    return frame.reset_index()
