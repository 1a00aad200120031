"""
Discrete-time simulation of layered, fully-connected SRM/LIF networks.

Each neuron k keeps a membrane potential

    o_{k,t} = sum_j w_{k,j} (alpha * in_j)_t + (beta * b_k)_t

and fires b_{k,t} = 1 iff o_{k,t} >= threshold. Input-layer values are real
and enter the first layer exactly like spike trains. Output-layer spikes are
rate decoded: r_c(x^t) counts the spikes of output neuron c up to t, and the
predictive probabilities are the softmax of those counts. Spikes emitted by
every non-output layer are counted as inference energy.

Histories live in ring buffers of depth ``kernel.horizon``; contributions
older than the horizon are exactly zero. All state arrays accept a leading
batch dimension, so the same step function drives one input or thousands.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import softmax

from spikecp.errors import InvalidParameterError, NonFiniteInputError, ShapeError
from spikecp.snn.kernels import FilterKernel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayerParams:
    """Weights of one fully-connected layer, shaped (post, pre)."""

    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ShapeError(f"Layer weights must be a matrix, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise NonFiniteInputError("Layer weights contain non-finite values")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def fan_in(self):
        return self.weights.shape[1]

    @property
    def size(self):
        return self.weights.shape[0]


@dataclass(frozen=True)
class NetworkParams:
    """Immutable network description; safe to share across threads."""

    layers: tuple
    n_input: int
    n_classes: int
    threshold: float
    kernel: FilterKernel
    T: int

    def __post_init__(self):
        layers = tuple(
            layer if isinstance(layer, LayerParams) else LayerParams(layer) for layer in self.layers
        )
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ShapeError("Network needs at least one layer")
        if not self.threshold > 0:
            raise InvalidParameterError(f"Threshold must be positive, got {self.threshold}")
        if self.T < 1:
            raise InvalidParameterError(f"Sequence length T must be >= 1, got {self.T}")
        expected_pre = self.n_input
        for index, layer in enumerate(layers):
            if layer.fan_in != expected_pre:
                raise ShapeError(
                    f"Layer {index} expects {layer.fan_in} inputs but the previous layer has {expected_pre}"
                )
            expected_pre = layer.size
        if layers[-1].size != self.n_classes:
            raise ShapeError(
                f"Output layer has {layers[-1].size} neurons, expected C={self.n_classes}"
            )

    @property
    def layer_sizes(self):
        return [layer.size for layer in self.layers]

    @property
    def hidden_count(self):
        """Number of neurons whose spikes count as inference energy."""
        return int(sum(layer.size for layer in self.layers[:-1]))

    @cached_property
    def alpha(self):
        return self.kernel.synaptic()

    @cached_property
    def beta(self):
        return self.kernel.refractory(self.threshold)


def hidden_neuron_count(params):
    return params.hidden_count


def init_params(n_input, hidden_sizes, n_classes, T, kernel, threshold=1.0, seed=0, gain=2.0):
    """Seeded Gaussian initialisation with std gain / sqrt(fan_in)."""
    rng = np.random.default_rng(seed)
    sizes = [int(n_input)] + [int(h) for h in hidden_sizes] + [int(n_classes)]
    layers = []
    for pre, post in zip(sizes[:-1], sizes[1:]):
        weights = rng.normal(0.0, gain / np.sqrt(pre), size=(post, pre))
        layers.append(LayerParams(weights))
    return NetworkParams(tuple(layers), int(n_input), int(n_classes), float(threshold), kernel, int(T))


@dataclass
class NetworkState:
    """Per-neuron input and spike histories plus the current time step."""

    input_rings: list
    spike_rings: list
    potentials: list
    batch_shape: tuple = ()
    t: int = 0

    @classmethod
    def zeros(cls, params, batch=None):
        batch_shape = () if batch is None else (int(batch),)
        h = params.kernel.horizon
        pre_sizes = [params.n_input] + params.layer_sizes[:-1]
        input_rings = [np.zeros(batch_shape + (h, n)) for n in pre_sizes]
        spike_rings = [np.zeros(batch_shape + (h, n)) for n in params.layer_sizes]
        potentials = [np.zeros(batch_shape + (n,)) for n in params.layer_sizes]
        return cls(input_rings, spike_rings, potentials, batch_shape, 0)

    def reset(self):
        for array in self.input_rings + self.spike_rings + self.potentials:
            array.fill(0.0)
        self.t = 0


def _check_input_step(params, state, x_t):
    x = np.asarray(x_t, dtype=np.float64)
    expected = state.batch_shape + (params.n_input,)
    if x.shape != expected:
        raise ShapeError(f"Input step has shape {x.shape}, expected {expected}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInputError("Input step contains non-finite values")
    return x


def forward_step(params, state, x_t):
    """
    Advance the network by one time step.

    Returns the output-layer spike vector y_t and the number of hidden-layer
    spikes emitted during this step (arrays when the state is batched).
    """
    if state.t >= params.T:
        raise InvalidParameterError(f"State already at t={state.t}, sequence length is T={params.T}")
    signal = _check_input_step(params, state, x_t)

    h = params.kernel.horizon
    ptr = state.t % h
    slots = np.arange(h)
    # weight of each ring slot given the age of the sample it holds
    alpha_w = params.alpha[(ptr - slots) % h]
    beta_w = params.beta[(ptr - 1 - slots) % h]

    hidden = np.zeros(state.batch_shape, dtype=np.int64)
    last = len(params.layers) - 1
    for index, layer in enumerate(params.layers):
        in_ring = state.input_rings[index]
        out_ring = state.spike_rings[index]
        in_ring[..., ptr, :] = signal
        filtered = alpha_w @ in_ring
        potential = filtered @ layer.weights.T + beta_w @ out_ring
        spikes = (potential >= params.threshold).astype(np.float64)
        out_ring[..., ptr, :] = spikes
        state.potentials[index][...] = potential
        if index < last:
            hidden += spikes.sum(axis=-1).astype(np.int64)
        signal = spikes

    state.t += 1
    y_t = signal.astype(np.int64)
    if not state.batch_shape:
        return y_t, int(hidden)
    return y_t, hidden


def predictive_probs(r):
    """Softmax of spike counts along the last axis (max-subtracted)."""
    counts = np.asarray(r, dtype=np.float64)
    if np.any(counts < 0):
        raise InvalidParameterError("Spike counts must be non-negative")
    return softmax(counts, axis=-1)


@dataclass(frozen=True)
class RunTrace:
    """Rate-decoded outputs and energy of one input at the recorded times."""

    spike_counts: np.ndarray
    probs: np.ndarray
    hidden_spikes: np.ndarray
    recorded_times: tuple

    def index_of(self, t):
        try:
            return self.recorded_times.index(int(t))
        except ValueError:
            raise InvalidParameterError(f"Time {t} was not recorded in this trace") from None

    def counts_at(self, t):
        return self.spike_counts[self.index_of(t)]

    def probs_at(self, t):
        return self.probs[self.index_of(t)]

    def energy_at(self, t):
        return int(self.hidden_spikes[self.index_of(t)])

    def check(self):
        """Verify rate-count bounds, monotonicity and probability normalisation."""
        times = np.asarray(self.recorded_times)
        counts = self.spike_counts
        if np.any(counts < 0) or np.any(counts > times[:, None]):
            raise InvalidParameterError("Spike counts violate 0 <= r_c(x^t) <= t")
        if np.any(np.diff(counts, axis=0) < 0) or np.any(np.diff(self.hidden_spikes) < 0):
            raise InvalidParameterError("Counts must be non-decreasing in t")
        if not np.allclose(self.probs.sum(axis=-1), 1.0, atol=1e-9, rtol=0.0):
            raise InvalidParameterError("Probability vectors must sum to 1")
        return self


def _check_sequence(params, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-2:] != (params.T, params.n_input):
        raise ShapeError(f"Input sequence has shape {x.shape}, expected (..., {params.T}, {params.n_input})")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInputError("Input sequence contains non-finite values")
    return x


def _check_times(params, checkpoints):
    times = sorted({int(t) for t in checkpoints})
    if not times:
        raise InvalidParameterError("Checkpoint set must not be empty")
    if times[0] < 1 or times[-1] > params.T:
        raise InvalidParameterError(f"Checkpoints must lie in 1..{params.T}, got {times}")
    return tuple(times)


class Simulation:
    """Incremental run of one input; never simulates past the last requested time."""

    def __init__(self, params, x):
        self.params = params
        self.x = _check_sequence(params, x)
        self.state = NetworkState.zeros(params)
        self.counts = np.zeros(params.n_classes, dtype=np.int64)
        self.hidden = 0

    @property
    def t(self):
        return self.state.t

    def step(self):
        y_t, hidden = forward_step(self.params, self.state, self.x[self.state.t])
        self.counts += y_t
        self.hidden += hidden
        return self.counts.copy()

    def advance_to(self, t):
        """Run up to time t (inclusive) and return (counts, probs, hidden spikes)."""
        if t < self.state.t or t > self.params.T:
            raise InvalidParameterError(f"Cannot advance from t={self.state.t} to t={t}")
        while self.state.t < t:
            self.step()
        counts = self.counts.copy()
        return counts, predictive_probs(counts), self.hidden


def run_to_checkpoints(params, x, checkpoints):
    """Simulate one input and record counts, probabilities and energy at each checkpoint."""
    times = _check_times(params, checkpoints)
    simulation = Simulation(params, x)
    counts, probs, hidden = [], [], []
    for t in times:
        r, p, s = simulation.advance_to(t)
        counts.append(r)
        probs.append(p)
        hidden.append(s)
    return RunTrace(
        np.array(counts, dtype=np.int64),
        np.array(probs),
        np.array(hidden, dtype=np.int64),
        times,
    )


@dataclass(frozen=True)
class TraceBatch:
    """Traces of many inputs on a shared time grid: arrays shaped (B, K, C) and (B, K)."""

    spike_counts: np.ndarray
    probs: np.ndarray
    hidden_spikes: np.ndarray
    recorded_times: tuple
    T: int = field(default=0)

    def __len__(self):
        return self.spike_counts.shape[0]

    @property
    def n_classes(self):
        return self.spike_counts.shape[-1]

    def item(self, i):
        return RunTrace(self.spike_counts[i], self.probs[i], self.hidden_spikes[i], self.recorded_times)

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return TraceBatch(
            self.spike_counts[indices],
            self.probs[indices],
            self.hidden_spikes[indices],
            self.recorded_times,
            self.T,
        )

    def at_times(self, times):
        """Restrict to a subset of the recorded times."""
        columns = [self.recorded_times.index(int(t)) for t in times]
        return TraceBatch(
            self.spike_counts[:, columns],
            self.probs[:, columns],
            self.hidden_spikes[:, columns],
            tuple(int(t) for t in times),
            self.T,
        )


def run_batch(params, X, times=None, chunk_size=256):
    """Simulate a stack of inputs (B, T, N) and record every requested time (default 1..T)."""
    X = _check_sequence(params, X)
    if X.ndim != 3:
        raise ShapeError(f"Batch input must have shape (B, T, N), got {X.shape}")
    times = _check_times(params, range(1, params.T + 1) if times is None else times)
    wanted = {t: k for k, t in enumerate(times)}
    n_items = X.shape[0]
    counts_out = np.zeros((n_items, len(times), params.n_classes), dtype=np.int64)
    hidden_out = np.zeros((n_items, len(times)), dtype=np.int64)

    for start in range(0, n_items, chunk_size):
        stop = min(start + chunk_size, n_items)
        state = NetworkState.zeros(params, batch=stop - start)
        counts = np.zeros((stop - start, params.n_classes), dtype=np.int64)
        hidden = np.zeros(stop - start, dtype=np.int64)
        for t in range(1, times[-1] + 1):
            y_t, h_t = forward_step(params, state, X[start:stop, t - 1])
            counts += y_t
            hidden += h_t
            if t in wanted:
                counts_out[start:stop, wanted[t]] = counts
                hidden_out[start:stop, wanted[t]] = hidden
        logger.debug(f"Simulated inputs {start}..{stop - 1} of {n_items}")

    return TraceBatch(counts_out, predictive_probs(counts_out), hidden_out, times, params.T)
