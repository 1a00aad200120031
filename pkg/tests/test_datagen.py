"""Tests for synthetic data generation, splits, dataset files and event ingestion."""

import numpy as np
import pytest
import yaml

from spikecp.errors import ConfigError, InvalidParameterError, ParseError, ShapeError, VersionError
from spikecp.utils.datagen import (
    LabeledDataset,
    SyntheticSpec,
    generate,
    load_synthetic_spec,
    prototype_spec,
    save_synthetic_spec,
    split_cal_test,
    split_indices,
)
from spikecp.utils.dataset_io import DATA_VERSION, dataset_header, load_dataset, save_dataset
from spikecp.utils.events import load_events


def test_binary_rates_without_noise_are_deterministic_per_class():
    spec = SyntheticSpec(rates=[[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]], T=5)
    data = generate(spec, 40, seed=1)
    for x, label in zip(data.inputs, data.labels):
        np.testing.assert_array_equal(x, np.tile(spec.rates[label], (5, 1)))


def test_same_seed_gives_identical_datasets(tmp_path, small_spec):
    first = save_dataset(generate(small_spec, 30, seed=7), tmp_path / "a.txt")
    second = save_dataset(generate(small_spec, 30, seed=7), tmp_path / "b.txt")
    assert first.read_bytes() == second.read_bytes()
    other = generate(small_spec, 30, seed=8)
    assert not np.array_equal(other.inputs, generate(small_spec, 30, seed=7).inputs)


def test_items_do_not_depend_on_dataset_size(small_spec):
    short = generate(small_spec, 10, seed=4)
    long = generate(small_spec, 50, seed=4)
    np.testing.assert_array_equal(short.inputs, long.inputs[:10])
    np.testing.assert_array_equal(short.labels, long.labels[:10])


def test_empirical_rates_follow_the_class_rates():
    rates = np.array([[0.8, 0.8, 0.2, 0.2], [0.2, 0.2, 0.8, 0.8]])
    data = generate(SyntheticSpec(rates=rates, T=4), 10000, seed=0)
    for c in range(2):
        frequency = data.inputs[data.labels == c].mean(axis=(0, 1))
        np.testing.assert_allclose(frequency, rates[c], atol=0.02)


def test_invalid_specs_are_rejected():
    with pytest.raises(InvalidParameterError):
        SyntheticSpec(rates=[[1.2, 0.0]], T=3)
    with pytest.raises(InvalidParameterError):
        SyntheticSpec(rates=[[0.5, 0.5], [0.5, 0.5]], T=3)
    with pytest.raises(InvalidParameterError):
        SyntheticSpec(rates=[[0.1], [0.9]], T=3, class_prior=[0.2, 0.2])
    with pytest.raises(ShapeError):
        SyntheticSpec(rates=[[0.1], [0.9]], T=3, class_prior=[1.0])
    degenerate = SyntheticSpec(rates=[[0.5], [0.5]], T=3, allow_degenerate=True)
    assert degenerate.n_classes == 2


def test_prototype_spec_shape_and_fingerprint():
    spec = prototype_spec()
    assert spec.rates.shape == (10, 50)
    assert spec.fingerprint() == prototype_spec().fingerprint()
    assert spec.fingerprint() != prototype_spec(noise_rate=0.1).fingerprint()


def test_synthetic_spec_files(tmp_path):
    path = tmp_path / "proto.yaml"
    path.write_text(yaml.safe_dump({"prototype": {"n_classes": 4, "n_input": 8, "T": 10}}))
    spec = load_synthetic_spec(path)
    assert (spec.n_classes, spec.n_input, spec.T) == (4, 8, 10)
    saved = save_synthetic_spec(spec, tmp_path / "explicit.yaml")
    assert load_synthetic_spec(saved).fingerprint() == spec.fingerprint()
    with pytest.raises(ConfigError):
        load_synthetic_spec(tmp_path / "missing.yaml")


def test_split_sizes_and_disjointness():
    cal, test = split_indices(2000, 200, seed=1)
    assert len(cal) == 200 and len(test) == 1800
    assert not set(cal) & set(test)
    assert np.all(np.diff(cal) > 0) and np.all(np.diff(test) > 0)
    _, single = split_indices(50, 49, seed=1)
    assert len(single) == 1
    _, limited = split_indices(50, 10, seed=1, n_test=5)
    assert len(limited) == 5


def test_split_depends_on_seed():
    a, _ = split_indices(1000, 100, seed=1)
    b, _ = split_indices(1000, 100, seed=2)
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("n_cal", [0, 50, -1])
def test_split_rejects_out_of_range_sizes(n_cal):
    with pytest.raises(InvalidParameterError):
        split_indices(50, n_cal, seed=0)


def test_split_cal_test_keeps_ids(small_data):
    cal, test = split_cal_test(small_data, 20, seed=0)
    assert len(cal) == 20 and len(test) == len(small_data) - 20
    np.testing.assert_array_equal(small_data.labels[test.ids], test.labels)


def test_every_item_is_equally_likely_to_be_calibration():
    n_items, n_cal, n_seeds = 20, 5, 4000
    inclusion = np.zeros(n_items)
    for seed in range(n_seeds):
        cal, _ = split_indices(n_items, n_cal, seed)
        inclusion[cal] += 1
    expected = n_seeds * n_cal / n_items
    spread = np.sqrt(n_seeds * (n_cal / n_items) * (1 - n_cal / n_items))
    assert np.all(np.abs(inclusion - expected) < 6 * spread)


def test_split_label_counts_do_not_depend_on_item_order(small_data):
    shuffled = small_data.subset(np.random.default_rng(8).permutation(len(small_data)))
    n_cal, n_seeds = 20, 2000
    expected = n_cal * np.bincount(small_data.labels, minlength=small_data.n_classes) / len(small_data)
    for data in (small_data, shuffled):
        counts = np.zeros(small_data.n_classes)
        for seed in range(n_seeds):
            cal, _ = split_cal_test(data, n_cal, seed)
            counts += np.bincount(cal.labels, minlength=small_data.n_classes)
        np.testing.assert_allclose(counts / n_seeds, expected, atol=0.35)


def test_dataset_is_read_only(small_data):
    with pytest.raises(ValueError):
        small_data.inputs[0, 0, 0] = 0.5
    with pytest.raises(InvalidParameterError):
        LabeledDataset(np.zeros((1, 2, 2)), [3], n_classes=2)


# --- dataset files ---------------------------------------------------------


def test_dataset_round_trip(tmp_path, small_data):
    path = save_dataset(small_data, tmp_path / "d.txt")
    loaded = load_dataset(path)
    np.testing.assert_array_equal(loaded.inputs, small_data.inputs)
    np.testing.assert_array_equal(loaded.labels, small_data.labels)
    assert loaded.fingerprint == small_data.fingerprint
    header = dataset_header(path)
    assert header["version"] == DATA_VERSION and header["n"] == len(small_data)


def test_truncated_dataset_names_the_section(tmp_path, small_data):
    path = save_dataset(small_data, tmp_path / "d.txt")
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(ParseError) as excinfo:
        load_dataset(path)
    assert "records" in str(excinfo.value)
    assert excinfo.value.line is not None


def test_dataset_without_records_section(tmp_path):
    path = tmp_path / "d.txt"
    path.write_text(f"version: {DATA_VERSION}\nn_classes: 2\nn_input: 1\nT: 1\nn: 1\n")
    with pytest.raises(ParseError, match="records"):
        load_dataset(path)


def test_dataset_version_mismatch(tmp_path, small_data):
    path = save_dataset(small_data, tmp_path / "d.txt")
    path.write_text(path.read_text().replace(DATA_VERSION, "spikecp-data/2"))
    with pytest.raises(VersionError):
        load_dataset(path)


# --- event lists -----------------------------------------------------------


def test_events_are_binned_and_clipped(tmp_path):
    path = tmp_path / "events.txt"
    path.write_text("# t channel polarity\n0.0 0 1\n0.1 0 1\n0.5 1 -1\n0.99 2 1\n")
    x = load_events(path, T=4, n_channels=3, duration=1.0)
    expected = np.zeros((4, 3))
    expected[0, 0] = 1.0
    expected[2, 1] = 1.0
    expected[3, 2] = 1.0
    np.testing.assert_array_equal(x, expected)


def test_event_polarity_split(tmp_path):
    path = tmp_path / "events.txt"
    path.write_text("0.5 1 0\n")
    x = load_events(path, T=2, n_channels=2, duration=1.0, split_polarity=True)
    assert x.shape == (2, 4)
    assert x[1, 3] == 1.0 and x.sum() == 1.0


def test_bad_events_raise_parse_errors(tmp_path):
    path = tmp_path / "events.txt"
    path.write_text("0.1 7 1\n")
    with pytest.raises(ParseError):
        load_events(path, T=2, n_channels=3)
    path.write_text("0.1 1\n")
    with pytest.raises(ParseError):
        load_events(path, T=2, n_channels=3)


def test_fractional_channel_is_rejected(tmp_path):
    path = tmp_path / "events.txt"
    path.write_text("0.1 0 1\n0.2 1.5 1\n")
    with pytest.raises(ParseError) as excinfo:
        load_events(path, T=2, n_channels=3, duration=1.0)
    assert excinfo.value.line == 2
    path.write_text("0.1 0 1\n0.2 2.0 1\n")
    assert load_events(path, T=2, n_channels=3, duration=1.0)[0, 2] == 1.0


def test_events_after_the_duration_are_rejected(tmp_path):
    path = tmp_path / "events.txt"
    path.write_text("0.2 0 1\n1.0 1 1\n1.5 2 1\n")
    with pytest.raises(ParseError) as excinfo:
        load_events(path, T=4, n_channels=3, duration=1.0)
    assert excinfo.value.line == 3
    path.write_text("0.2 0 1\n1.0 1 1\n")
    x = load_events(path, T=4, n_channels=3, duration=1.0)
    assert x[3, 1] == 1.0 and x.sum() == 2.0


def test_empty_event_list_is_all_zero(tmp_path):
    path = tmp_path / "events.txt"
    path.write_text("# nothing recorded\n")
    assert not load_events(path, T=3, n_channels=2).any()
