"""
Adaptive inference policies.

SpikeCP walks the checkpoints in increasing order, builds the conformal set
from the rate-decoded outputs at each one and stops at the first checkpoint
whose set holds at most I_th labels (the last checkpoint otherwise). DC-SNN
checks every time step and stops once the maximum softmax confidence reaches
p_th, deciding for the arg-max class (lowest index on ties). The static
point classifier always waits for T.

Two entry points exist for each policy: ``*_infer`` simulates a single input
incrementally and never runs the network past the stopping time, while
``*_decide_batch`` works on precomputed traces of many inputs. Both give
identical decisions.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from spikecp.conformal.calibration import predicted_set, set_membership
from spikecp.conformal.scores import NcScoreKind, batch_scores, nc_scores
from spikecp.errors import InvalidParameterError, ShapeError
from spikecp.snn.network import Simulation, predictive_probs, run_batch

logger = logging.getLogger(__name__)

SET = "set"
POINT = "point"

DEFAULT_DCSNN_GRID = tuple(round(0.01 * k, 2) for k in range(1, 100))


@dataclass(frozen=True)
class AdaptiveDecision:
    kind: str
    stop_time: int
    energy: int
    label_set: frozenset = None
    point: int = None
    log: list = field(default_factory=list)

    @property
    def size(self):
        return len(self.label_set) if self.kind == SET else 1

    def covers(self, label):
        if self.kind == SET:
            return int(label) in self.label_set
        return int(label) == self.point

    def to_dict(self):
        record = {"kind": self.kind, "stop_time": int(self.stop_time), "energy": int(self.energy)}
        if self.kind == SET:
            record["set"] = sorted(self.label_set)
            record["set_size"] = len(self.label_set)
        else:
            record["point"] = int(self.point)
        return record

    def to_row(self, input_id, policy, label):
        """Per-input CSV row: id, policy, stop time, set size or point label, covered flag, energy."""
        return {
            "input_id": int(input_id),
            "policy": str(policy),
            "stop_time": int(self.stop_time),
            "set_size": self.size if self.kind == SET else np.nan,
            "point": self.point if self.kind == POINT else np.nan,
            "covered": bool(self.covers(label)),
            "energy": int(self.energy),
        }


@dataclass(frozen=True)
class BatchDecisions:
    """Decisions for many inputs; ``set_masks`` is (B, C) for set policies, ``points`` (B,) otherwise."""

    kind: str
    stop_times: np.ndarray
    energies: np.ndarray
    set_masks: np.ndarray = None
    points: np.ndarray = None

    def __len__(self):
        return len(self.stop_times)

    @property
    def set_sizes(self):
        if self.kind == SET:
            return self.set_masks.sum(axis=1)
        return np.ones(len(self), dtype=np.int64)

    def covered(self, labels):
        labels = np.asarray(labels, dtype=np.int64)
        if self.kind == SET:
            return self.set_masks[np.arange(len(labels)), labels]
        return self.points == labels

    def item(self, i):
        if self.kind == SET:
            label_set = frozenset(int(c) for c in np.flatnonzero(self.set_masks[i]))
            return AdaptiveDecision(SET, int(self.stop_times[i]), int(self.energies[i]), label_set=label_set)
        return AdaptiveDecision(POINT, int(self.stop_times[i]), int(self.energies[i]), point=int(self.points[i]))

    def to_frame(self, labels, input_ids, policy):
        frame = pd.DataFrame(
            {
                "input_id": np.asarray(input_ids, dtype=np.int64),
                "policy": str(policy),
                "stop_time": self.stop_times.astype(np.int64),
                "set_size": self.set_sizes if self.kind == SET else np.nan,
                "point": self.points if self.kind == POINT else np.nan,
                "covered": self.covered(labels),
                "energy": self.energies.astype(np.int64),
            }
        )
        return frame


def _check_spikecp_args(params_classes, schedule, score_kind, i_th, checkpoints):
    if tuple(schedule.checkpoints) != tuple(checkpoints.times):
        raise InvalidParameterError(
            f"Schedule checkpoints {list(schedule.checkpoints)} do not match {list(checkpoints.times)}"
        )
    kind = NcScoreKind.parse(score_kind)
    if kind is not NcScoreKind.parse(schedule.score_kind):
        raise InvalidParameterError(f"Schedule was calibrated with {schedule.score_kind} scores, not {kind.value}")
    if not 0 <= int(i_th) <= params_classes:
        raise InvalidParameterError(f"I_th must lie in 0..{params_classes}, got {i_th}")
    return kind


def spikecp_infer(params, x, schedule, score_kind, i_th, checkpoints):
    """Stop at the first checkpoint whose conformal set has at most I_th labels."""
    kind = _check_spikecp_args(params.n_classes, schedule, score_kind, i_th, checkpoints)
    simulation = Simulation(params, x)
    log = []
    for t in checkpoints.times:
        counts, probs, hidden = simulation.advance_to(t)
        label_set = predicted_set(nc_scores(kind, t, counts, probs), schedule.threshold_at(t))
        log.append((t, len(label_set)))
        if len(label_set) <= i_th:
            break
    return AdaptiveDecision(SET, t, int(hidden), label_set=label_set, log=log)


def spikecp_decide_batch(batch, schedule, score_kind, i_th):
    """SpikeCP decisions on traces recorded at (at least) the schedule's checkpoints."""
    kind = NcScoreKind.parse(score_kind)
    if not 0 <= int(i_th) <= batch.n_classes:
        raise InvalidParameterError(f"I_th must lie in 0..{batch.n_classes}, got {i_th}")
    at_checkpoints = batch.at_times(schedule.checkpoints)
    masks = set_membership(batch_scores(at_checkpoints, kind), schedule.thresholds)
    informative = masks.sum(axis=2) <= i_th
    informative[:, -1] = True
    stop_index = np.argmax(informative, axis=1)
    rows = np.arange(len(at_checkpoints))
    stop_times = np.asarray(at_checkpoints.recorded_times)[stop_index]
    return BatchDecisions(
        SET,
        stop_times,
        at_checkpoints.hidden_spikes[rows, stop_index],
        set_masks=masks[rows, stop_index],
    )


def _check_p_th(p_th):
    if not 0.0 < p_th < 1.0:
        raise InvalidParameterError(f"p_th must lie in (0, 1), got {p_th}")


def dcsnn_infer(params, x, p_th):
    """Stop at the first t with max_c p_c(x^t) >= p_th, else at T; decide the arg-max."""
    _check_p_th(p_th)
    simulation = Simulation(params, x)
    log = []
    for t in range(1, params.T + 1):
        counts = simulation.step()
        probs = predictive_probs(counts)
        confidence = float(probs.max())
        log.append((t, confidence))
        if confidence >= p_th:
            break
    return AdaptiveDecision(POINT, t, int(simulation.hidden), point=int(np.argmax(probs)), log=log)


def _full_grid(batch):
    expected = tuple(range(1, batch.T + 1))
    if tuple(batch.recorded_times) != expected:
        raise ShapeError("DC-SNN needs traces recorded at every time step 1..T")


def dcsnn_decide_batch(batch, p_th):
    _check_p_th(p_th)
    _full_grid(batch)
    confident = batch.probs.max(axis=2) >= p_th
    confident[:, -1] = True
    stop_index = np.argmax(confident, axis=1)
    rows = np.arange(len(batch))
    return BatchDecisions(
        POINT,
        stop_index + 1,
        batch.hidden_spikes[rows, stop_index],
        points=np.argmax(batch.probs[rows, stop_index], axis=1),
    )


def static_point_decide_batch(batch):
    """Non-adaptive point classifier: arg-max of the rate-decoded output at T."""
    at_end = batch.at_times([batch.recorded_times[-1]])
    return BatchDecisions(
        POINT,
        np.full(len(batch), at_end.recorded_times[0]),
        at_end.hidden_spikes[:, 0],
        points=np.argmax(at_end.probs[:, 0], axis=1),
    )


def calibration_accuracy(batch, labels, grid):
    """Empirical accuracy of the DC-SNN decision on the calibration traces for each p_th."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        raise InvalidParameterError("DC-SNN calibration needs a non-empty calibration set")
    return np.array([np.mean(dcsnn_decide_batch(batch, p_th).points == labels) for p_th in grid])


def select_p_th(accuracy, grid, p_targ):
    """Smallest grid value meeting the target, else the smallest one maximising accuracy."""
    meets = np.flatnonzero(np.asarray(accuracy) >= p_targ)
    if len(meets):
        return float(grid[meets[0]])
    logger.debug(f"No p_th reaches calibration accuracy {p_targ}; using the smallest maximiser")
    return float(grid[int(np.argmax(accuracy))])


def _check_grid(grid):
    grid = np.asarray(DEFAULT_DCSNN_GRID if grid is None else grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) == 0:
        raise InvalidParameterError("DC-SNN grid must be a non-empty list")
    if np.any(np.diff(grid) <= 0) or grid[0] <= 0 or grid[-1] >= 1:
        raise InvalidParameterError("DC-SNN grid must be sorted ascending with values in (0, 1)")
    return grid


def dcsnn_calibrate_traces(batch, labels, p_targ, grid=None):
    grid = _check_grid(grid)
    return select_p_th(calibration_accuracy(batch, labels, grid), grid, p_targ)


def dcsnn_calibrate(params, cal_set, p_targ, grid=None):
    """Pick p_th on a labelled calibration set by simulating every calibration input."""
    if len(cal_set) == 0:
        raise InvalidParameterError("DC-SNN calibration needs a non-empty calibration set")
    batch = run_batch(params, cal_set.inputs)
    return dcsnn_calibrate_traces(batch, cal_set.labels, p_targ, grid)
