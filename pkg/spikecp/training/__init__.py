"""Surrogate-gradient trainer producing model files for the numpy simulator."""

from spikecp.training.trainer import TrainConfig, evaluate_accuracy, train

__all__ = ["TrainConfig", "evaluate_accuracy", "train"]
