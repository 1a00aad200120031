"""Adaptive inference: SpikeCP set classification and point-classifier baselines."""

from spikecp.inference.adaptive import (
    AdaptiveDecision,
    BatchDecisions,
    dcsnn_calibrate,
    dcsnn_decide_batch,
    dcsnn_infer,
    spikecp_decide_batch,
    spikecp_infer,
    static_point_decide_batch,
)
from spikecp.inference.checkpoints import CheckpointSet
from spikecp.inference.policies import Policy

__all__ = [
    "AdaptiveDecision",
    "BatchDecisions",
    "CheckpointSet",
    "Policy",
    "dcsnn_calibrate",
    "dcsnn_decide_batch",
    "dcsnn_infer",
    "spikecp_decide_batch",
    "spikecp_infer",
    "static_point_decide_batch",
]
