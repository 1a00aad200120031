"""
Monte Carlo experiment harness.

Every trial draws a fresh calibration/test split of the evaluation data,
recalibrates the policy on the calibration part and decides every test
input. The network is simulated once per input up front; all trials and
sweep values reuse those traces, which gives the same decisions as running
the incremental policies input by input.

Outputs (under the configured output directory):

    report.csv     one row of aggregates (mean and 95% empirical interval)
    per_trial.csv  one row per trial, ordered by trial index
    per_input.csv  one row per (trial, test input)
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from spikecp.analysis.metrics import aggregate, trial_metrics
from spikecp.conformal.calibration import build_schedule, dump_calibration_scores
from spikecp.errors import InvalidParameterError, ShapeError
from spikecp.inference.adaptive import (
    POINT,
    AdaptiveDecision,
    dcsnn_calibrate,
    dcsnn_calibrate_traces,
    dcsnn_decide_batch,
    dcsnn_infer,
    spikecp_decide_batch,
    spikecp_infer,
    static_point_decide_batch,
)
from spikecp.inference.checkpoints import CheckpointSet
from spikecp.inference.policies import Policy
from spikecp.snn.model_io import load_model
from spikecp.snn.network import run_batch, run_to_checkpoints
from spikecp.utils.config import SWEEP_PARAMETERS, default_threads
from spikecp.utils.datagen import generate, load_synthetic_spec, split_indices
from spikecp.utils.dataset_io import load_dataset

logger = logging.getLogger(__name__)

REPORT_FILE = "report.csv"
PER_TRIAL_FILE = "per_trial.csv"
PER_INPUT_FILE = "per_input.csv"


@dataclass
class MetricsReport:
    config: dict
    summary: dict
    per_trial: pd.DataFrame
    per_input: pd.DataFrame

    def to_frame(self):
        """Single-row aggregate table: experiment settings followed by the metric summary."""
        settings = {key: self.config[key] for key in ("name", "policy", "p_targ", "i_th", "n_cal", "seed")}
        settings["n_checkpoints"] = self.config["n_checkpoints"]
        row = {**settings, **self.summary}
        if "p_th" in self.per_trial:
            row["p_th_mean"] = float(self.per_trial["p_th"].mean())
        row["static_accuracy_mean"] = float(self.per_trial["static_accuracy"].mean())
        return pd.DataFrame([row])

    def write(self, output_dir):
        output_path = Path(output_dir)
        output_path.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(output_path / REPORT_FILE, index=False, float_format="%.17g")
        self.per_trial.to_csv(output_path / PER_TRIAL_FILE, index=False, float_format="%.17g")
        self.per_input.to_csv(output_path / PER_INPUT_FILE, index=False, float_format="%.17g")
        logger.info(f"Wrote {REPORT_FILE}, {PER_TRIAL_FILE} and {PER_INPUT_FILE} to {output_path}")
        return output_path


def trial_seeds(seed, n_trials):
    """Independent per-trial seeds derived from the experiment seed."""
    children = np.random.SeedSequence(int(seed)).spawn(int(n_trials))
    return [int(child.generate_state(1)[0]) for child in children]


def _decide(policy, cal_batch, cal_labels, test_batch, cfg, checkpoints, score_dir=None):
    """Calibrate one policy on the calibration traces and decide the test traces."""
    extra = {}
    if policy.is_set_policy:
        kind = policy.score_kind
        schedule, scores = build_schedule(cal_batch, cal_labels, checkpoints.times, kind, cfg.p_targ)
        if score_dir is not None:
            dump_calibration_scores(scores, score_dir)
        decisions = spikecp_decide_batch(test_batch, schedule, kind, cfg.i_th)
        extra["alpha"] = schedule.alpha
        for t, s_th in zip(schedule.checkpoints, schedule.thresholds):
            extra[f"threshold_t{t}"] = float(s_th)
    elif policy is Policy.DCSNN:
        p_th = dcsnn_calibrate_traces(cal_batch, cal_labels, cfg.p_targ, cfg.dcsnn_grid)
        decisions = dcsnn_decide_batch(test_batch, p_th)
        extra["p_th"] = p_th
    elif policy is Policy.DCSNN_NAIVE:
        decisions = dcsnn_decide_batch(test_batch, cfg.p_targ)
        extra["p_th"] = float(cfg.p_targ)
    else:
        decisions = static_point_decide_batch(test_batch)
    return decisions, extra


def _run_trial(trial, seed, batch, labels, input_ids, cfg, policy, checkpoints, hidden_count, score_dir):
    cal_idx, test_idx = split_indices(len(batch), cfg.n_cal, seed, n_test=cfg.n_test)
    cal_batch, test_batch = batch.subset(cal_idx), batch.subset(test_idx)
    test_labels = labels[test_idx]
    decisions, extra = _decide(
        policy, cal_batch, labels[cal_idx], test_batch, cfg, checkpoints, score_dir if trial == 0 else None
    )

    metrics = trial_metrics(decisions, test_labels, cfg.p_targ, batch.T, batch.n_classes, hidden_count)
    static = static_point_decide_batch(test_batch)
    row = {"trial": trial, "seed": seed, "n_cal": len(cal_idx), **metrics}
    row["static_accuracy"] = float(np.mean(static.covered(test_labels)))
    row.update(extra)

    per_input = decisions.to_frame(test_labels, input_ids[test_idx], policy.value)
    per_input.insert(0, "trial", trial)
    per_input["label"] = test_labels
    return row, per_input


def run_trials(batch, labels, cfg, hidden_count, input_ids=None, score_dir=None):
    """
    Trial loop on precomputed traces (one TraceBatch row per evaluation input).

    Trials run on a thread pool; results are reduced in trial order, so the
    report does not depend on the worker count.
    """
    policy = Policy.parse(cfg.policy)
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(batch):
        raise ShapeError(f"Got {len(labels)} labels for {len(batch)} traces")
    if not 1 <= cfg.n_cal < len(batch):
        raise InvalidParameterError(f"n_cal must lie in 1..{len(batch) - 1}, got {cfg.n_cal}")
    if cfg.n_test is not None and cfg.n_cal + cfg.n_test > len(batch):
        raise InvalidParameterError(
            f"n_cal + n_test = {cfg.n_cal + cfg.n_test} exceeds the {len(batch)} available inputs"
        )
    input_ids = np.arange(len(batch)) if input_ids is None else np.asarray(input_ids, dtype=np.int64)
    checkpoints = CheckpointSet.parse(cfg.checkpoints, batch.T) if policy.is_set_policy else None

    seeds = trial_seeds(cfg.seed, cfg.n_trials)
    threads = cfg.threads or default_threads()
    logger.info(
        f"Running {cfg.n_trials} trials of {policy.value} (p_targ={cfg.p_targ}, n_cal={cfg.n_cal}) on {threads} threads"
    )

    results = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_run_trial)(
            trial, seeds[trial], batch, labels, input_ids, cfg, policy, checkpoints, hidden_count, score_dir
        )
        for trial in range(cfg.n_trials)
    )

    per_trial = pd.DataFrame([row for row, _ in results])
    per_input = pd.concat([frame for _, frame in results], ignore_index=True)
    config = cfg.to_dict()
    config["n_checkpoints"] = len(checkpoints) if checkpoints is not None else np.nan
    report = MetricsReport(config, aggregate(per_trial, cfg.p_targ), per_trial, per_input)
    logger.info(
        f"{policy.value}: coverage={report.summary['coverage_mean']:.4f}, "
        f"gap={report.summary['reliability_gap_mean']:+.4f}, "
        f"latency={report.summary['normalized_latency_mean']:.3f}"
    )
    return report


def load_experiment_data(cfg):
    """Evaluation data: a dataset file, or a fresh draw from a synthetic spec."""
    if cfg.dataset_path is not None:
        return load_dataset(cfg.dataset_path)
    spec = load_synthetic_spec(cfg.synthetic_spec_path)
    return generate(spec, cfg.n_items, cfg.data_seed)


def check_compatible(params, data):
    if (data.n_input, data.T, data.n_classes) != (params.n_input, params.T, params.n_classes):
        raise ShapeError(
            f"Data has (N, T, C) = ({data.n_input}, {data.T}, {data.n_classes}) "
            f"but the model expects ({params.n_input}, {params.T}, {params.n_classes})"
        )


def _prepare(cfg):
    params = load_model(cfg.model_path)
    data = load_experiment_data(cfg)
    check_compatible(params, data)
    logger.info(f"Simulating {len(data)} inputs through {params.layer_sizes} (T={params.T})")
    return params, data, run_batch(params, data.inputs)


def run_experiment(cfg, dump_scores=False):
    """Load model and data, simulate every input once and run the configured trials."""
    params, data, batch = _prepare(cfg)
    score_dir = Path(cfg.output_dir) / "cal_scores" if dump_scores else None
    return run_trials(batch, data.labels, cfg, params.hidden_count, input_ids=data.ids, score_dir=score_dir)


def sweep(cfg, parameter, values):
    """One report per value of a sweep parameter, all sharing the base seed."""
    if parameter not in SWEEP_PARAMETERS:
        raise InvalidParameterError(
            f"Unknown sweep parameter '{parameter}', expected one of {', '.join(SWEEP_PARAMETERS)}"
        )
    values = list(values)
    if not values:
        return []
    configs = [cfg.with_value(parameter, value) for value in values]
    params, data, batch = _prepare(cfg)
    reports = []
    for value, value_cfg in zip(values, configs):
        logger.info(f"Sweep {parameter}={value}")
        reports.append(run_trials(batch, data.labels, value_cfg, params.hidden_count, input_ids=data.ids))
    return reports


def sweep_frame(reports, parameter, values):
    """Aggregate rows of a sweep, one per value, with the swept value in front."""
    if not reports:
        return pd.DataFrame(columns=["parameter", "value"])
    frames = []
    for value, report in zip(values, reports):
        frame = report.to_frame()
        frame.insert(0, "value", value)
        frame.insert(0, "parameter", parameter)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def write_sweep(reports, parameter, values, output_file):
    output_path = Path(output_file)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    sweep_frame(reports, parameter, list(values)).to_csv(output_path, index=False, float_format="%.17g")
    logger.info(f"Wrote sweep over {parameter} to {output_path}")
    return output_path


def calibrate_and_infer(params, cal_set, x, policy, p_targ, i_th=None, checkpoints=None, grid=None):
    """
    Offline calibration on ``cal_set`` followed by incremental inference on one input.

    Returns the decision and a dict describing the calibration (thresholds or p_th).
    """
    policy = Policy.parse(policy)
    check_compatible(params, cal_set)
    if policy.is_set_policy:
        if i_th is None or checkpoints is None:
            raise InvalidParameterError("SpikeCP needs both I_th and a checkpoint set")
        checkpoint_set = CheckpointSet.parse(checkpoints, params.T)
        cal_batch = run_batch(params, cal_set.inputs, times=checkpoint_set.times)
        schedule, _ = build_schedule(cal_batch, cal_set.labels, checkpoint_set.times, policy.score_kind, p_targ)
        decision = spikecp_infer(params, x, schedule, policy.score_kind, i_th, checkpoint_set)
        return decision, schedule.to_dict()
    if policy is Policy.DCSNN:
        p_th = dcsnn_calibrate(params, cal_set, p_targ, grid)
        return dcsnn_infer(params, x, p_th), {"p_th": p_th}
    if policy is Policy.DCSNN_NAIVE:
        return dcsnn_infer(params, x, p_targ), {"p_th": float(p_targ)}
    trace = run_to_checkpoints(params, x, [params.T])
    point = int(np.argmax(trace.spike_counts[0]))
    return AdaptiveDecision(POINT, params.T, int(trace.hidden_spikes[0]), point=point), {}
