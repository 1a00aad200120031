"""Tests for kernels, the SRM simulator, rate decoding and model files."""

import math

import numpy as np
import pytest

from spikecp.errors import InvalidParameterError, NonFiniteInputError, ParseError, ShapeError, VersionError
from spikecp.snn.kernels import (
    FIRST_ORDER,
    LITERAL_TAU_REF,
    NEGLIGIBLE,
    SECOND_ORDER,
    FilterKernel,
    default_horizon,
    make_kernel,
)
from spikecp.snn.model_io import MODEL_VERSION, load_model, model_header, save_model
from spikecp.snn.network import (
    NetworkState,
    Simulation,
    forward_step,
    hidden_neuron_count,
    init_params,
    predictive_probs,
    run_batch,
    run_to_checkpoints,
)

from conftest import single_neuron


def _potentials(params, x):
    state = NetworkState.zeros(params)
    potentials, spikes = [], []
    for x_t in x:
        y_t, _ = forward_step(params, state, x_t)
        potentials.append(float(state.potentials[-1][0]))
        spikes.append(int(y_t[0]))
    return potentials, spikes


# --- kernels ---------------------------------------------------------------


def test_first_order_kernel_values():
    kernel = FilterKernel(FIRST_ORDER, tau_mem=2.0, tau_ref=1.0, horizon=3)
    np.testing.assert_allclose(kernel.synaptic(), [1.0, math.exp(-0.5), math.exp(-1.0)], rtol=0, atol=1e-15)
    np.testing.assert_allclose(kernel.refractory(2.0), [-2.0, -2.0 * math.exp(-1), -2.0 * math.exp(-2)])


def test_second_order_kernel_values():
    kernel = FilterKernel(SECOND_ORDER, tau_mem=4.0, tau_syn=2.0, horizon=2)
    expected = [math.exp(-1 / 4) - math.exp(-1 / 2), math.exp(-2 / 4) - math.exp(-2 / 2)]
    np.testing.assert_allclose(kernel.synaptic(), expected, rtol=0, atol=1e-15)


def test_kernel_rejects_bad_parameters():
    with pytest.raises(InvalidParameterError):
        FilterKernel("third-order")
    with pytest.raises(InvalidParameterError):
        FilterKernel(FIRST_ORDER, tau_mem=-1.0)
    with pytest.raises(InvalidParameterError):
        FilterKernel(SECOND_ORDER, tau_mem=2.0, tau_syn=2.0)
    with pytest.raises(InvalidParameterError):
        FilterKernel(FIRST_ORDER, horizon=0)


def test_default_horizon_reaches_negligible_values():
    h = default_horizon(FIRST_ORDER, 4.0, 2.0, 1.0, T=1000)
    kernel = make_kernel(FIRST_ORDER, 4.0, 2.0, 1.0, T=1000)
    assert kernel.horizon == h < 1000
    assert math.exp(-h / 4.0) < NEGLIGIBLE
    assert default_horizon(FIRST_ORDER, 4.0, 2.0, 1.0, T=80) == 80


# --- forward_step ----------------------------------------------------------


def test_impulse_response_halves_each_step(impulse_network):
    potentials, spikes = _potentials(impulse_network, [[1.0], [0.0], [0.0]])
    np.testing.assert_allclose(potentials, [1.0, 0.5, 0.25], rtol=0, atol=1e-12)
    assert spikes == [0, 0, 0]


def test_contributions_beyond_horizon_are_exactly_zero():
    params = single_neuron(T=5, horizon=3)
    potentials, _ = _potentials(params, [[1.0], [0.0], [0.0], [0.0], [0.0]])
    assert potentials[3] == 0.0 and potentials[4] == 0.0


def test_zero_input_gives_zero_potentials_and_no_spikes(small_params):
    state = NetworkState.zeros(small_params)
    for _ in range(small_params.T):
        y_t, hidden = forward_step(small_params, state, np.zeros(small_params.n_input))
        assert not y_t.any() and hidden == 0
        assert all(not p.any() for p in state.potentials)


def test_refractory_term_suppresses_the_next_spike():
    params = single_neuron(weight=1.0, threshold=1.0, T=2)
    potentials, spikes = _potentials(params, [[1.0], [1.0]])
    # t=2: filtered drive 1 + 0.5 minus the reset of the t=1 spike
    np.testing.assert_allclose(potentials, [1.0, 0.5], rtol=0, atol=1e-12)
    assert spikes == [1, 0]


def test_literal_refractory_constant_resets_for_one_step_only():
    kernel = make_kernel(tau_ref=LITERAL_TAU_REF, T=80)
    beta = kernel.refractory(2.0)
    assert beta[0] == -2.0
    assert abs(beta[1]) < 1e-20
    assert kernel.horizon == make_kernel(T=80).horizon


def test_forward_step_rejects_bad_input(small_params):
    state = NetworkState.zeros(small_params)
    with pytest.raises(ShapeError):
        forward_step(small_params, state, np.zeros(small_params.n_input + 1))
    bad = np.zeros(small_params.n_input)
    bad[0] = np.nan
    with pytest.raises(NonFiniteInputError):
        forward_step(small_params, state, bad)


def test_forward_step_stops_at_T():
    params = single_neuron(T=1)
    state = NetworkState.zeros(params)
    forward_step(params, state, [0.0])
    with pytest.raises(InvalidParameterError):
        forward_step(params, state, [0.0])


# --- traces ----------------------------------------------------------------


def test_run_to_checkpoints_records_requested_times(rng):
    kernel = make_kernel(T=80)
    params = init_params(5, [7], 3, 80, kernel, seed=2)
    x = (rng.random((80, 5)) < 0.4).astype(float)
    trace = run_to_checkpoints(params, x, [20, 40, 60, 80])
    assert trace.recorded_times == (20, 40, 60, 80)
    assert trace.spike_counts.shape == (4, 3)
    trace.check()
    again = run_to_checkpoints(params, x, [20, 40, 60, 80])
    np.testing.assert_array_equal(trace.spike_counts, again.spike_counts)
    np.testing.assert_array_equal(trace.hidden_spikes, again.hidden_spikes)


def test_saturated_output_counts_every_step():
    params = single_neuron(weight=100.0, threshold=1.0, T=10)
    trace = run_to_checkpoints(params, np.ones((10, 1)), range(1, 11))
    np.testing.assert_array_equal(trace.spike_counts[:, 0], np.arange(1, 11))


def test_empty_checkpoint_set_is_rejected(small_params):
    with pytest.raises(InvalidParameterError):
        run_to_checkpoints(small_params, np.zeros((small_params.T, small_params.n_input)), [])


def test_energy_is_additive_across_simulation_steps(small_params, small_data):
    simulation = Simulation(small_params, small_data.inputs[0])
    _, _, at_4 = simulation.advance_to(4)
    _, _, at_9 = simulation.advance_to(9)
    trace = run_to_checkpoints(small_params, small_data.inputs[0], [4, 9])
    assert (at_4, at_9) == (trace.energy_at(4), trace.energy_at(9))
    assert at_9 >= at_4


def test_batched_and_single_runs_agree(small_params, small_data):
    times = [3, 6, 12]
    batch = run_batch(small_params, small_data.inputs[:25], times=times, chunk_size=7)
    for i in range(25):
        single = run_to_checkpoints(small_params, small_data.inputs[i], times)
        item = batch.item(i)
        np.testing.assert_array_equal(item.spike_counts, single.spike_counts)
        np.testing.assert_array_equal(item.hidden_spikes, single.hidden_spikes)
        np.testing.assert_array_equal(item.probs, single.probs)


def test_argmax_of_counts_and_probs_agree(small_params, small_data):
    batch = run_batch(small_params, small_data.inputs)
    np.testing.assert_array_equal(np.argmax(batch.spike_counts, axis=2), np.argmax(batch.probs, axis=2))
    assert np.all(np.diff(batch.spike_counts, axis=1) >= 0)


def test_truncated_kernel_matches_long_horizon(rng):
    T = 200
    short = make_kernel(FIRST_ORDER, tau_mem=4.0, tau_ref=1.0, T=T)
    assert short.horizon < T
    long_params = init_params(6, [], 4, T, short.with_horizon(T), seed=9, gain=0.5)
    short_params = init_params(6, [], 4, T, short, seed=9, gain=0.5)
    x = rng.random((T, 6))
    long_state, short_state = NetworkState.zeros(long_params), NetworkState.zeros(short_params)
    for t in range(T):
        forward_step(long_params, long_state, x[t])
        forward_step(short_params, short_state, x[t])
        np.testing.assert_allclose(short_state.potentials[0], long_state.potentials[0], rtol=0, atol=1e-9)


def test_hidden_neuron_count(small_params):
    assert hidden_neuron_count(small_params) == 8


# --- rate decoding -----------------------------------------------------------


def test_softmax_examples():
    np.testing.assert_allclose(predictive_probs([2, 2, 2]), [1 / 3] * 3)
    e = math.e
    np.testing.assert_allclose(predictive_probs([1, 0, 0]), [e / (e + 2), 1 / (e + 2), 1 / (e + 2)], rtol=1e-12)
    probs = predictive_probs([80, 0])
    assert np.all(np.isfinite(probs)) and probs[0] >= 1 - 1e-30


def test_softmax_rejects_negative_counts():
    with pytest.raises(InvalidParameterError):
        predictive_probs([1, -1])


# --- model files -----------------------------------------------------------


def test_model_round_trip_is_bit_exact(tmp_path, small_params):
    path = save_model(small_params, tmp_path / "m.yaml")
    loaded = load_model(path)
    assert loaded.kernel == small_params.kernel
    assert loaded.threshold == small_params.threshold
    for a, b in zip(loaded.layers, small_params.layers):
        np.testing.assert_array_equal(a.weights, b.weights)
    assert model_header(path)["version"] == MODEL_VERSION


def test_model_version_mismatch(tmp_path, small_params):
    path = save_model(small_params, tmp_path / "m.yaml")
    path.write_text(path.read_text().replace(MODEL_VERSION, "spikecp-model/9"))
    with pytest.raises(VersionError):
        load_model(path)


def test_model_missing_section_names_the_field(tmp_path):
    path = tmp_path / "m.yaml"
    path.write_text(f"version: {MODEL_VERSION}\nn_input: 2\n")
    with pytest.raises(ParseError) as excinfo:
        load_model(path)
    assert excinfo.value.field == "n_classes"
    assert str(path) in str(excinfo.value)


def test_malformed_model_reports_line(tmp_path):
    path = tmp_path / "m.yaml"
    path.write_text(f"version: {MODEL_VERSION}\nlayers: [[1, 2\nT: 3\n")
    with pytest.raises(ParseError) as excinfo:
        load_model(path)
    assert excinfo.value.line is not None
