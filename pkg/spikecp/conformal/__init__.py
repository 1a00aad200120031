"""Split conformal prediction core: NC scores, thresholds and predicted sets."""

from spikecp.conformal.calibration import (
    CalibrationScores,
    ThresholdSchedule,
    bonferroni_alpha,
    build_schedule,
    calibrate_thresholds,
    predicted_set,
    quantile_rank,
)
from spikecp.conformal.scores import NcScoreKind, global_nc_score, local_nc_score

__all__ = [
    "CalibrationScores",
    "NcScoreKind",
    "ThresholdSchedule",
    "bonferroni_alpha",
    "build_schedule",
    "calibrate_thresholds",
    "global_nc_score",
    "local_nc_score",
    "predicted_set",
    "quantile_rank",
]
