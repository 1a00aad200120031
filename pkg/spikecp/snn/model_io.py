"""
Model file I/O.

A model is a single human-readable YAML document::

    version: spikecp-model/1
    n_input: 50
    n_classes: 10
    T: 80
    threshold: 1.0
    kernel: {kind: first-order, tau_mem: 4.0, tau_syn: 2.0, tau_ref: 1.0, horizon: 80}
    layer_sizes: [64, 10]
    layers:
      - weights: [[...], ...]      # row-major, one row per post-synaptic neuron

Floats are written with their shortest round-trip representation, so
save/load is bit-exact.
"""

import logging
from pathlib import Path

import numpy as np
import yaml

from spikecp.errors import ParseError, SpikeCPError, VersionError
from spikecp.snn.kernels import FilterKernel
from spikecp.snn.network import LayerParams, NetworkParams

logger = logging.getLogger(__name__)

MODEL_VERSION = "spikecp-model/1"
REQUIRED_FIELDS = ("n_input", "n_classes", "T", "threshold", "kernel", "layer_sizes", "layers")


def model_to_dict(params):
    return {
        "version": MODEL_VERSION,
        "n_input": int(params.n_input),
        "n_classes": int(params.n_classes),
        "T": int(params.T),
        "threshold": float(params.threshold),
        "kernel": params.kernel.to_dict(),
        "layer_sizes": [int(n) for n in params.layer_sizes],
        "layers": [{"weights": layer.weights.tolist()} for layer in params.layers],
    }


def save_model(params, path):
    """Write the model document; parent directories are created."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(model_to_dict(params), f, sort_keys=False, default_flow_style=None, width=120)
    logger.info(f"Saved model ({params.layer_sizes} neurons) to {path}")
    return path


def _load_document(path):
    try:
        with open(path) as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ParseError(f"Malformed model file: {getattr(e, 'problem', e)}", path=path, line=line) from e
    if not isinstance(document, dict):
        raise ParseError("Model file is empty or not a key-value document", path=path)
    return document


def model_from_dict(document, path=None):
    version = document.get("version")
    if version is None:
        raise ParseError("Missing version header", path=path, field="version")
    if version != MODEL_VERSION:
        raise VersionError(
            f"Unsupported model version '{version}', expected '{MODEL_VERSION}'", path=path, field="version"
        )
    for name in REQUIRED_FIELDS:
        if name not in document:
            raise ParseError(f"Missing section '{name}'", path=path, field=name)

    layers = document["layers"]
    if not isinstance(layers, list) or len(layers) != len(document["layer_sizes"]):
        raise ParseError(
            f"Expected {len(document['layer_sizes'])} layers, found "
            f"{len(layers) if isinstance(layers, list) else 'none'}",
            path=path,
            field="layers",
        )
    weights = []
    for index, (layer, size) in enumerate(zip(layers, document["layer_sizes"])):
        if not isinstance(layer, dict) or "weights" not in layer:
            raise ParseError(f"Layer {index} has no weights", path=path, field=f"layers[{index}].weights")
        try:
            matrix = np.array(layer["weights"], dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise ParseError(f"Layer {index} weights are not a numeric matrix", path=path,
                             field=f"layers[{index}].weights") from e
        if matrix.ndim != 2 or matrix.shape[0] != int(size):
            raise ParseError(
                f"Layer {index} weights have shape {matrix.shape}, expected {int(size)} rows",
                path=path,
                field=f"layers[{index}].weights",
            )
        weights.append(LayerParams(matrix))

    try:
        return NetworkParams(
            layers=tuple(weights),
            n_input=int(document["n_input"]),
            n_classes=int(document["n_classes"]),
            threshold=float(document["threshold"]),
            kernel=FilterKernel.from_dict(document["kernel"]),
            T=int(document["T"]),
        )
    except KeyError as e:
        raise ParseError(f"Missing kernel field {e}", path=path, field="kernel") from e
    except (SpikeCPError, TypeError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(f"Inconsistent model: {e}", path=path) from e


def load_model(path):
    path = Path(path)
    params = model_from_dict(_load_document(path), path=path)
    logger.info(f"Loaded model from {path}: layers={params.layer_sizes}, T={params.T}")
    return params


def model_header(path):
    """Header fields of a model file, without the weights."""
    document = _load_document(Path(path))
    return {key: value for key, value in document.items() if key != "layers"}
