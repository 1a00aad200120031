"""Shared fixtures: hand-built networks, small synthetic datasets and files on disk."""

import math

import numpy as np
import pytest

from spikecp.snn.kernels import FIRST_ORDER, FilterKernel, make_kernel
from spikecp.snn.model_io import save_model
from spikecp.snn.network import LayerParams, NetworkParams, init_params
from spikecp.utils.config import ExperimentConfig
from spikecp.utils.datagen import generate, prototype_spec
from spikecp.utils.dataset_io import save_dataset

# exp(-1 / HALVING_TAU) == 0.5
HALVING_TAU = 1.0 / math.log(2.0)


def single_neuron(weight=1.0, threshold=10.0, T=3, horizon=None, tau_mem=HALVING_TAU, tau_ref=1.0):
    kernel = FilterKernel(FIRST_ORDER, tau_mem=tau_mem, tau_syn=2.0, tau_ref=tau_ref, horizon=horizon or T)
    return NetworkParams((LayerParams([[weight]]),), n_input=1, n_classes=1, threshold=threshold, kernel=kernel, T=T)


@pytest.fixture
def impulse_network():
    return single_neuron()


@pytest.fixture
def small_spec():
    return prototype_spec(n_classes=3, n_input=6, T=12, rate_high=0.7, rate_low=0.1, overlap=0, noise_rate=0.02)


@pytest.fixture
def small_data(small_spec):
    return generate(small_spec, 120, seed=3)


@pytest.fixture
def small_params(small_spec):
    kernel = make_kernel(FIRST_ORDER, tau_mem=3.0, tau_ref=1.0, T=small_spec.T)
    return init_params(small_spec.n_input, [8], small_spec.n_classes, small_spec.T, kernel, seed=5)


@pytest.fixture
def model_file(tmp_path, small_params):
    return save_model(small_params, tmp_path / "model.yaml")


@pytest.fixture
def data_file(tmp_path, small_data):
    return save_dataset(small_data, tmp_path / "data.txt")


@pytest.fixture
def trace_config():
    """Config for running trials on precomputed traces (the file paths are never opened)."""

    def make(**values):
        base = dict(model_path="model.yaml", dataset_path="data.txt", n_trials=5, n_cal=30, threads=2, seed=11)
        base.update(values)
        return ExperimentConfig(**base)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
