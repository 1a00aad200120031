"""Spiking network core: kernels, simulation, rate decoding and model files."""

from spikecp.snn.kernels import FilterKernel, make_kernel
from spikecp.snn.network import (
    LayerParams,
    NetworkParams,
    NetworkState,
    RunTrace,
    Simulation,
    TraceBatch,
    forward_step,
    init_params,
    predictive_probs,
    run_batch,
    run_to_checkpoints,
)
from spikecp.snn.model_io import load_model, save_model

__all__ = [
    "FilterKernel",
    "LayerParams",
    "NetworkParams",
    "NetworkState",
    "RunTrace",
    "Simulation",
    "TraceBatch",
    "forward_step",
    "init_params",
    "load_model",
    "make_kernel",
    "predictive_probs",
    "run_batch",
    "run_to_checkpoints",
    "save_model",
]
