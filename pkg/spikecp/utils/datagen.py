"""
Synthetic rate-coded datasets and calibration/test splitting.

Every item is drawn i.i.d. from a SyntheticSpec: a label from the class
prior, then each input entry x_{t,j} as Bernoulli(rate[c][j]) XOR
Bernoulli(noise_rate). Item i uses its own PCG64 stream seeded from
(seed, i), so datasets reproduce across platforms and items can be generated
in any order.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from spikecp.errors import ConfigError, InvalidParameterError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticSpec:
    rates: np.ndarray
    T: int
    noise_rate: float = 0.0
    class_prior: np.ndarray = None
    allow_degenerate: bool = False

    def __post_init__(self):
        rates = np.array(self.rates, dtype=np.float64, ndmin=2)
        if np.any(rates < 0) or np.any(rates > 1):
            raise InvalidParameterError("Firing rates must lie in [0, 1]")
        if not self.allow_degenerate and len(np.unique(rates, axis=0)) != rates.shape[0]:
            raise InvalidParameterError("Rate matrix rows must be distinct (classes separable in expectation)")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise InvalidParameterError(f"noise_rate must lie in [0, 1], got {self.noise_rate}")
        if int(self.T) < 1:
            raise InvalidParameterError(f"T must be >= 1, got {self.T}")
        prior = self.class_prior
        if prior is None:
            prior = np.full(rates.shape[0], 1.0 / rates.shape[0])
        prior = np.array(prior, dtype=np.float64)
        if prior.shape != (rates.shape[0],):
            raise ShapeError(f"class_prior has shape {prior.shape}, expected ({rates.shape[0]},)")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-9:
            raise InvalidParameterError("class_prior must be a probability vector")
        rates.setflags(write=False)
        prior.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "class_prior", prior)
        object.__setattr__(self, "T", int(self.T))

    @property
    def n_classes(self):
        return self.rates.shape[0]

    @property
    def n_input(self):
        return self.rates.shape[1]

    def to_dict(self):
        return {
            "T": self.T,
            "noise_rate": float(self.noise_rate),
            "rates": self.rates.tolist(),
            "class_prior": self.class_prior.tolist(),
            "allow_degenerate": bool(self.allow_degenerate),
        }

    def fingerprint(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


def prototype_spec(n_classes=10, n_input=50, T=80, rate_high=0.6, rate_low=0.2, overlap=1, noise_rate=0.05):
    """Each class drives its own channel group at rate_high and borrows ``overlap`` channels of the next."""
    group = n_input // n_classes
    if group < 1:
        raise InvalidParameterError(f"Need at least one channel per class, got N={n_input}, C={n_classes}")
    rates = np.full((n_classes, n_input), float(rate_low))
    for c in range(n_classes):
        rates[c, c * group:(c + 1) * group] = rate_high
        neighbour = ((c + 1) % n_classes) * group
        rates[c, neighbour:neighbour + min(overlap, group)] = rate_high
    return SyntheticSpec(rates=rates, T=T, noise_rate=noise_rate)


def load_synthetic_spec(path):
    """Read a YAML spec with either an explicit ``rates`` matrix or a ``prototype`` recipe."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("Synthetic spec not found", path)
    try:
        with open(path) as f:
            document = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed synthetic spec ({e})", path) from e
    try:
        if "prototype" in document:
            recipe = dict(document["prototype"])
            return prototype_spec(**recipe)
        return SyntheticSpec(
            rates=document["rates"],
            T=document["T"],
            noise_rate=document.get("noise_rate", 0.0),
            class_prior=document.get("class_prior"),
            allow_degenerate=document.get("allow_degenerate", False),
        )
    except KeyError as e:
        raise ConfigError(f"Synthetic spec is missing {e}", path) from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid synthetic spec ({e})", path) from e


def save_synthetic_spec(spec, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(spec.to_dict(), f, sort_keys=False, default_flow_style=None, width=120)
    return path


@dataclass(frozen=True)
class LabeledDataset:
    """Input sequences (n, T, N) with labels in 0..C-1; arrays are read-only."""

    inputs: np.ndarray
    labels: np.ndarray
    n_classes: int
    seed: int = 0
    fingerprint: str = ""
    ids: np.ndarray = field(default=None)

    def __post_init__(self):
        inputs = np.array(self.inputs, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64)
        if inputs.ndim != 3 or inputs.shape[0] != labels.shape[0]:
            raise ShapeError(f"Inputs {inputs.shape} and labels {labels.shape} do not match")
        if np.any(labels < 0) or np.any(labels >= self.n_classes):
            raise InvalidParameterError(f"Labels must lie in 0..{self.n_classes - 1}")
        if np.any(inputs < 0) or np.any(inputs > 1):
            raise InvalidParameterError("Input values must lie in [0, 1]")
        ids = np.arange(len(labels)) if self.ids is None else np.array(self.ids, dtype=np.int64)
        for array in (inputs, labels, ids):
            array.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "ids", ids)

    def __len__(self):
        return len(self.labels)

    @property
    def T(self):
        return self.inputs.shape[1]

    @property
    def n_input(self):
        return self.inputs.shape[2]

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            self.inputs[indices], self.labels[indices], self.n_classes, self.seed, self.fingerprint, self.ids[indices]
        )


def _generate_item(spec, seed, index):
    rng = np.random.default_rng([seed, index])
    label = int(rng.choice(spec.n_classes, p=spec.class_prior))
    bits = rng.random((spec.T, spec.n_input)) < spec.rates[label]
    flips = rng.random((spec.T, spec.n_input)) < spec.noise_rate
    return np.logical_xor(bits, flips).astype(np.float64), label


def generate(spec, n, seed):
    """Draw n i.i.d. labelled sequences from the spec."""
    if int(n) < 1:
        raise InvalidParameterError(f"Number of items must be >= 1, got {n}")
    if int(seed) < 0:
        raise InvalidParameterError(f"Seed must be non-negative, got {seed}")
    inputs = np.empty((int(n), spec.T, spec.n_input))
    labels = np.empty(int(n), dtype=np.int64)
    for i in range(int(n)):
        inputs[i], labels[i] = _generate_item(spec, int(seed), i)
    logger.info(f"Generated {n} items (C={spec.n_classes}, N={spec.n_input}, T={spec.T}, seed={seed})")
    return LabeledDataset(inputs, labels, spec.n_classes, int(seed), spec.fingerprint())


def split_indices(n_items, n_cal, seed, n_test=None):
    """Uniformly random disjoint (cal, test) index arrays, each in ascending order."""
    if not 1 <= int(n_cal) < int(n_items):
        raise InvalidParameterError(f"n_cal must lie in 1..{n_items - 1}, got {n_cal}")
    order = np.random.default_rng(seed).permutation(int(n_items))
    test = order[n_cal:] if n_test is None else order[n_cal:n_cal + int(n_test)]
    return np.sort(order[:n_cal]), np.sort(test)


def split_cal_test(data, n_cal, seed):
    cal_idx, test_idx = split_indices(len(data), n_cal, seed)
    return data.subset(cal_idx), data.subset(test_idx)
