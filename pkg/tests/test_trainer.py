"""Tests for the surrogate-gradient trainer."""

import numpy as np
import pytest
import torch

from spikecp.errors import InvalidParameterError, ShapeError, TrainingDivergedError
from spikecp.snn.kernels import make_kernel
from spikecp.snn.network import init_params, run_batch
from spikecp.training import trainer
from spikecp.training.trainer import (
    SpikeFunction,
    TrainConfig,
    evaluate_accuracy,
    forward_counts,
    smooth_loss,
    train,
)
from spikecp.utils.datagen import SyntheticSpec, generate

from conftest import single_neuron


def _separable_task(T=20, n_input=8):
    """Two classes driving disjoint channel groups."""
    half = n_input // 2
    rates = np.full((2, n_input), 0.05)
    rates[0, :half] = 0.8
    rates[1, half:] = 0.8
    return SyntheticSpec(rates=rates, T=T)


def test_surrogate_derivative_is_logistic():
    u = torch.tensor([-1.0, 0.0, 0.3], dtype=torch.float64, requires_grad=True)
    spikes = SpikeFunction.apply(u, 4.0)
    spikes.sum().backward()
    np.testing.assert_array_equal(spikes.detach().numpy(), [0.0, 1.0, 1.0])
    sig = torch.sigmoid(4.0 * u.detach())
    torch.testing.assert_close(u.grad, 4.0 * sig * (1 - sig))


def test_forward_counts_match_numpy_simulator(small_params, small_data):
    weights = [torch.tensor(np.array(layer.weights)) for layer in small_params.layers]
    alpha = torch.tensor(np.array(small_params.alpha))
    beta = torch.tensor(np.array(small_params.beta))
    x = torch.tensor(np.array(small_data.inputs[:20]))
    counts = forward_counts(weights, x, alpha, beta, small_params.threshold, 5.0)
    batch = run_batch(small_params, small_data.inputs[:20], times=[small_params.T])
    np.testing.assert_array_equal(counts.numpy(), batch.spike_counts[:, 0])


def test_smooth_gradient_matches_finite_differences():
    params = single_neuron(weight=0.7, threshold=1.0, T=3, tau_mem=2.0)
    x = torch.tensor([[[1.0], [0.0], [1.0]]], dtype=torch.float64)
    alpha = torch.tensor(np.array(params.alpha))
    beta = torch.tensor(np.array(params.beta))

    # one output neuron: check the smoothed spike count itself
    def count_of(weight):
        return forward_counts([weight], x, alpha, beta, params.threshold, 2.0, smooth=True).sum()

    weight = torch.tensor([[0.7]], dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(count_of, (weight,), eps=1e-6, atol=1e-8, rtol=1e-4)


def test_smooth_gradient_of_two_layer_loss():
    kernel = make_kernel(T=4)
    params = init_params(3, [4], 2, 4, kernel, seed=3)
    x = torch.tensor(np.random.default_rng(0).random((5, 4, 3)))
    labels = torch.tensor([0, 1, 1, 0, 1])
    weights = [torch.tensor(np.array(layer.weights), requires_grad=True) for layer in params.layers]
    assert torch.autograd.gradcheck(
        lambda *ws: smooth_loss(params, list(ws), x, labels, slope=3.0), tuple(weights), eps=1e-6, atol=1e-8, rtol=1e-4
    )


def test_zero_learning_rate_leaves_weights_unchanged(small_params, small_data):
    trained, history = train(small_params, small_data, TrainConfig(epochs=2, learning_rate=0.0, batch_size=16))
    for before, after in zip(small_params.layers, trained.layers):
        np.testing.assert_array_equal(before.weights, after.weights)
    assert list(history["epoch"]) == [1, 2]


def test_training_is_deterministic(small_params, small_data):
    cfg = TrainConfig(epochs=2, learning_rate=0.01, batch_size=16, seed=4)
    first, history_a = train(small_params, small_data, cfg)
    second, history_b = train(small_params, small_data, cfg)
    for a, b in zip(first.layers, second.layers):
        np.testing.assert_array_equal(a.weights, b.weights)
    assert history_a.equals(history_b)


def test_training_does_not_touch_the_dataset(small_params, small_data):
    before = small_data.inputs.copy()
    train(small_params, small_data, TrainConfig(epochs=1, batch_size=32))
    np.testing.assert_array_equal(small_data.inputs, before)


def test_zero_epochs_returns_initial_model(small_params, small_data):
    trained, history = train(small_params, small_data, TrainConfig(epochs=0))
    assert trained is small_params
    assert history.empty


def test_divergence_is_reported(monkeypatch, small_params, small_data):
    def exploding(weights, *args, **kwargs):
        return weights[-1].sum() * torch.full((len(args[0]), small_params.n_classes), float("nan"))

    monkeypatch.setattr(trainer, "forward_counts", exploding)
    with pytest.raises(TrainingDivergedError) as excinfo:
        train(small_params, small_data, TrainConfig(epochs=1))
    assert excinfo.value.epoch == 1 and excinfo.value.batch == 0


def test_train_checks_dimensions(small_params):
    other = generate(_separable_task(T=small_params.T, n_input=4), 10, seed=0)
    with pytest.raises(ShapeError):
        train(small_params, other, TrainConfig(epochs=1))


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        TrainConfig(batch_size=0)
    with pytest.raises(InvalidParameterError):
        TrainConfig(surrogate_slope=0.0)
    with pytest.raises(InvalidParameterError):
        TrainConfig(learning_rate=-0.1)


@pytest.mark.slow
def test_trained_model_separates_two_classes():
    spec = _separable_task()
    train_set = generate(spec, 400, seed=1)
    held_out = generate(spec, 200, seed=2)
    params = init_params(spec.n_input, [64], 2, spec.T, make_kernel(T=spec.T), seed=0)
    trained, history = train(params, train_set, TrainConfig(epochs=15, learning_rate=0.005, batch_size=32))
    assert history["loss"].iloc[-1] < history["loss"].iloc[0]
    assert evaluate_accuracy(trained, held_out) >= 0.9
