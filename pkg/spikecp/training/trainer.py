"""
Surrogate-gradient training of small fully-connected SNNs.

The network is unrolled over all T steps in torch (float64) with the same
kernels, refractory term and threshold as the numpy simulator, so a trained
model behaves identically once exported. The Heaviside spike function keeps
its exact forward pass; its derivative is replaced by the logistic surrogate
slope * sigma(slope * u) * (1 - sigma(slope * u)).

Loss is the cross-entropy between softmax(r(x^T)) and the label, optimised
with plain mini-batch SGD.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F

from spikecp.errors import InvalidParameterError, ShapeError, TrainingDivergedError
from spikecp.snn.network import LayerParams, run_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    learning_rate: float = 0.005
    batch_size: int = 32
    surrogate_slope: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if int(self.epochs) < 0:
            raise InvalidParameterError(f"epochs must be >= 0, got {self.epochs}")
        if not self.learning_rate >= 0:
            raise InvalidParameterError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if int(self.batch_size) < 1:
            raise InvalidParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.surrogate_slope > 0:
            raise InvalidParameterError(f"surrogate_slope must be positive, got {self.surrogate_slope}")
        if int(self.seed) < 0:
            raise InvalidParameterError(f"seed must be non-negative, got {self.seed}")


class SpikeFunction(torch.autograd.Function):
    """Heaviside step of u = o - threshold with a logistic surrogate derivative."""

    @staticmethod
    def forward(ctx, u, slope):
        ctx.save_for_backward(u)
        ctx.slope = slope
        return (u >= 0).to(u.dtype)

    @staticmethod
    def backward(ctx, grad_spikes):
        (u,) = ctx.saved_tensors
        sig = torch.sigmoid(ctx.slope * u)
        return grad_spikes * ctx.slope * sig * (1.0 - sig), None


def _synaptic_filter(signal, alpha):
    """Causal convolution (B, T, n) -> (B, T, n): sum_d alpha[d] * signal[t - d]."""
    batch, steps, width = signal.shape
    h = alpha.shape[0]
    flat = signal.permute(0, 2, 1).reshape(batch * width, 1, steps)
    flat = F.pad(flat, (h - 1, 0))
    filtered = F.conv1d(flat, alpha.flip(0).view(1, 1, h))
    return filtered.view(batch, width, steps).permute(0, 2, 1)


def layer_forward(signal, weights, alpha, beta, threshold, slope, smooth=False):
    """Spike trains (B, T, post) of one layer driven by ``signal`` (B, T, pre)."""
    current = _synaptic_filter(signal, alpha) @ weights.T
    h = beta.shape[0]
    spikes = []
    for t in range(signal.shape[1]):
        u = current[:, t] - threshold
        if spikes:
            past = torch.stack(spikes[-h:][::-1], dim=0)
            u = u + torch.tensordot(beta[: past.shape[0]], past, dims=1)
        if smooth:
            spikes.append(torch.sigmoid(slope * u))
        else:
            spikes.append(SpikeFunction.apply(u, slope))
    return torch.stack(spikes, dim=1)


def forward_counts(weights, x, alpha, beta, threshold, slope, smooth=False):
    """Output spike counts r(x^T), shaped (B, C), for a stack of inputs x (B, T, N)."""
    signal = x
    for w in weights:
        signal = layer_forward(signal, w, alpha, beta, threshold, slope, smooth=smooth)
    return signal.sum(dim=1)


def _kernel_tensors(params):
    alpha = torch.tensor(np.array(params.alpha), dtype=torch.float64)
    beta = torch.tensor(np.array(params.beta), dtype=torch.float64)
    return alpha, beta


def smooth_loss(params, weights, x, labels, slope):
    """Cross-entropy of the logistic-smoothed network; differentiable everywhere."""
    alpha, beta = _kernel_tensors(params)
    counts = forward_counts(weights, x, alpha, beta, params.threshold, slope, smooth=True)
    return F.cross_entropy(counts, labels)


def _check_data(params, data):
    if len(data) == 0:
        raise InvalidParameterError("Training set is empty")
    if data.n_input != params.n_input or data.T != params.T:
        raise ShapeError(
            f"Dataset has N={data.n_input}, T={data.T} but the network expects N={params.n_input}, T={params.T}"
        )
    if data.n_classes != params.n_classes:
        raise ShapeError(f"Dataset has C={data.n_classes} classes, network has {params.n_classes}")


def train(params, data, cfg):
    """
    Backpropagation through time with surrogate gradients.

    Returns the trained NetworkParams and a per-epoch history DataFrame with
    columns epoch, loss and accuracy (training accuracy of the arg-max of the
    final counts, lowest index on ties).
    """
    _check_data(params, data)
    history = []
    if cfg.epochs == 0:
        logger.info("epochs=0: returning the initial weights")
        return params, pd.DataFrame(history, columns=["epoch", "loss", "accuracy"])

    alpha, beta = _kernel_tensors(params)
    weights = [torch.tensor(np.array(layer.weights), dtype=torch.float64, requires_grad=True) for layer in params.layers]
    optimizer = torch.optim.SGD(weights, lr=cfg.learning_rate)
    x_all = torch.tensor(np.array(data.inputs), dtype=torch.float64)
    y_all = torch.tensor(np.array(data.labels), dtype=torch.int64)
    generator = torch.Generator().manual_seed(int(cfg.seed))

    for epoch in range(1, cfg.epochs + 1):
        order = torch.randperm(len(data), generator=generator)
        total_loss = 0.0
        correct = 0
        for batch_index, start in enumerate(range(0, len(data), cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            counts = forward_counts(weights, x_all[idx], alpha, beta, params.threshold, cfg.surrogate_slope)
            loss = F.cross_entropy(counts, y_all[idx])
            if not torch.isfinite(loss):
                raise TrainingDivergedError(epoch, batch_index, float(loss))
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total_loss += float(loss) * len(idx)
            correct += int((counts.detach().argmax(dim=1) == y_all[idx]).sum())
        record = {"epoch": epoch, "loss": total_loss / len(data), "accuracy": correct / len(data)}
        history.append(record)
        logger.info(f"Epoch {epoch}/{cfg.epochs}: loss={record['loss']:.4f}, accuracy={record['accuracy']:.3f}")

    layers = tuple(LayerParams(w.detach().numpy().copy()) for w in weights)
    return replace(params, layers=layers), pd.DataFrame(history)


def evaluate_accuracy(params, data):
    """Point accuracy at T of the numpy simulator (arg-max of r(x^T))."""
    _check_data(params, data)
    batch = run_batch(params, data.inputs, times=[params.T])
    predictions = np.argmax(batch.spike_counts[:, 0], axis=1)
    return float(np.mean(predictions == data.labels))
