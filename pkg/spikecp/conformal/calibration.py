"""
Split conformal calibration with a Bonferroni correction across checkpoints.

For every checkpoint t the calibration NC scores s^t[i] of the true labels
are ranked and the threshold s_th^t is their ceil((1 - alpha)(n + 1))-th
smallest value, or +inf when alpha < 1 / (n + 1). Thresholds are computed
independently per checkpoint with alpha = (1 - p_targ) / |checkpoints|, so
the per-checkpoint guarantees hold simultaneously and therefore at any
data-dependent stopping checkpoint.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from spikecp.conformal.scores import NcScoreKind, batch_scores
from spikecp.errors import InvalidParameterError, ShapeError

logger = logging.getLogger(__name__)

# Guards the ceil() and the alpha >= 1/(n+1) test against float round-off,
# e.g. (1 - 0.9) / 1 evaluating to 0.09999999999999998.
RANK_TOL = 1e-12


def bonferroni_alpha(p_targ, n_checkpoints):
    """Per-checkpoint miscoverage level (1 - p_targ) / |checkpoints|."""
    if not 0.0 < p_targ < 1.0:
        raise InvalidParameterError(f"p_targ must lie in (0, 1), got {p_targ}")
    if int(n_checkpoints) < 1:
        raise InvalidParameterError(f"Need at least one checkpoint, got {n_checkpoints}")
    return (1.0 - p_targ) / int(n_checkpoints)


def quantile_rank(n_cal, alpha):
    """1-based rank k of the calibration threshold, or None when the threshold is +inf."""
    if n_cal <= 0 or alpha * (n_cal + 1) < 1.0 - RANK_TOL:
        return None
    k = math.ceil((1.0 - alpha) * (n_cal + 1) - RANK_TOL)
    return min(max(k, 1), n_cal)


@dataclass(frozen=True)
class CalibrationScores:
    """True-label NC scores of the calibration set, one row per checkpoint."""

    checkpoints: tuple
    scores: np.ndarray

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64, ndmin=2)
        if scores.shape[0] != len(self.checkpoints):
            raise ShapeError(
                f"Got score rows for {scores.shape[0]} checkpoints, expected {len(self.checkpoints)}"
            )
        if np.any(np.isnan(scores)) or np.any(scores == -np.inf):
            raise InvalidParameterError("Calibration scores must be finite or +inf")
        scores.setflags(write=False)
        object.__setattr__(self, "checkpoints", tuple(int(t) for t in self.checkpoints))
        object.__setattr__(self, "scores", scores)

    @property
    def n_cal(self):
        return self.scores.shape[1]

    @classmethod
    def from_traces(cls, batch, labels, kind, checkpoints=None):
        """Scores s^t[i] = s_{c[i]}(x^t[i]) from a TraceBatch of the calibration inputs."""
        if checkpoints is not None:
            batch = batch.at_times(checkpoints)
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) != len(batch):
            raise ShapeError(f"Got {len(labels)} labels for {len(batch)} calibration traces")
        all_scores = batch_scores(batch, kind)
        true_scores = np.take_along_axis(all_scores, labels[:, None, None], axis=2)[:, :, 0]
        return cls(batch.recorded_times, true_scores.T)


@dataclass(frozen=True)
class ThresholdSchedule:
    """Per-checkpoint thresholds s_th^t and the levels used to derive them."""

    checkpoints: tuple
    thresholds: np.ndarray
    alpha: float
    p_targ: float
    n_cal: int
    score_kind: NcScoreKind = NcScoreKind.GLOBAL

    def threshold_at(self, t):
        return float(self.thresholds[self.checkpoints.index(int(t))])

    def to_dict(self):
        return {
            "score_kind": NcScoreKind.parse(self.score_kind).value,
            "alpha": float(self.alpha),
            "p_targ": float(self.p_targ),
            "n_cal": int(self.n_cal),
            "checkpoints": list(self.checkpoints),
            "thresholds": [float(s) for s in self.thresholds],
        }

    def to_frame(self):
        return pd.DataFrame({"checkpoint": list(self.checkpoints), "threshold": self.thresholds})


def calibrate_thresholds(scores, alpha, p_targ=None, score_kind=NcScoreKind.GLOBAL):
    """Order-statistic threshold for every checkpoint independently."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    n_cal = scores.n_cal
    k = quantile_rank(n_cal, alpha)
    if k is None:
        if n_cal == 0:
            logger.warning("Empty calibration set: every threshold is +inf")
        else:
            logger.warning(
                f"alpha={alpha:.4g} < 1/(n_cal+1)={1.0 / (n_cal + 1):.4g}: every threshold is +inf"
            )
        thresholds = np.full(len(scores.checkpoints), np.inf)
    else:
        # k-th smallest per row; ties share a value, so the selection is order-independent
        thresholds = np.partition(scores.scores, k - 1, axis=1)[:, k - 1].copy()
    thresholds.setflags(write=False)
    if p_targ is None:
        p_targ = 1.0 - alpha * len(scores.checkpoints)
    return ThresholdSchedule(
        scores.checkpoints, thresholds, float(alpha), float(p_targ), int(n_cal), NcScoreKind.parse(score_kind)
    )


def build_schedule(cal_batch, cal_labels, checkpoints, kind, p_targ):
    """Offline phase: calibration scores at every checkpoint, Bonferroni alpha, thresholds."""
    alpha = bonferroni_alpha(p_targ, len(checkpoints))
    scores = CalibrationScores.from_traces(cal_batch, cal_labels, kind, checkpoints)
    return calibrate_thresholds(scores, alpha, p_targ=p_targ, score_kind=kind), scores


def predicted_set(test_scores, s_th):
    """Labels whose NC score does not exceed the threshold (may be empty)."""
    test_scores = np.asarray(test_scores, dtype=np.float64)
    if np.any(np.isnan(test_scores)):
        raise InvalidParameterError("Test scores must be finite or +inf")
    return frozenset(int(c) for c in np.flatnonzero(test_scores <= s_th))


def set_membership(scores, thresholds):
    """Boolean mask of predicted sets; ``thresholds`` broadcasts over the class axis."""
    return np.asarray(scores) <= np.asarray(thresholds)[..., None]


def per_checkpoint_coverage(schedule, test_scores):
    """Fraction of true-label test scores at or below the threshold, per checkpoint."""
    test_scores = np.asarray(test_scores, dtype=np.float64)
    covered = test_scores <= np.asarray(schedule.thresholds)[:, None]
    return pd.Series(covered.mean(axis=1), index=pd.Index(schedule.checkpoints, name="checkpoint"))


def dump_calibration_scores(scores, output_dir, prefix="cal_scores"):
    """Write one (index, score) table per checkpoint for auditing."""
    output_path = Path(output_dir)
    output_path.mkdir(parents=True, exist_ok=True)
    written = []
    for t, row in zip(scores.checkpoints, scores.scores):
        table_file = output_path / f"{prefix}_t{t}.csv"
        pd.DataFrame({"index": np.arange(len(row)), "score": row}).to_csv(table_file, index=False)
        written.append(table_file)
    logger.info(f"Wrote {len(written)} calibration score tables to {output_path}")
    return written
