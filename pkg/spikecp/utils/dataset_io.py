"""
Dataset file I/O.

Layout: ``key: value`` header lines (version spikecp-data/1, n_classes,
n_input, T, n, seed, fingerprint), a ``records:`` marker, then one
space-separated record per item: the label followed by the T x N input values
in row-major order. Values are written with 17 significant digits, which
round-trips float64 exactly.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from spikecp.errors import ParseError, VersionError
from spikecp.utils.datagen import LabeledDataset

logger = logging.getLogger(__name__)

DATA_VERSION = "spikecp-data/1"
HEADER_FIELDS = ("n_classes", "n_input", "T", "n")
RECORDS_MARKER = "records:"


def save_dataset(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, T, N = data.inputs.shape
    with open(path, "w") as f:
        f.write(f"version: {DATA_VERSION}\n")
        f.write(f"n_classes: {data.n_classes}\n")
        f.write(f"n_input: {N}\n")
        f.write(f"T: {T}\n")
        f.write(f"n: {n}\n")
        f.write(f"seed: {data.seed}\n")
        f.write(f"fingerprint: {data.fingerprint}\n")
        f.write(f"{RECORDS_MARKER}\n")
        records = pd.DataFrame(data.inputs.reshape(n, T * N))
        records.insert(0, "label", data.labels)
        records.to_csv(f, sep=" ", header=False, index=False, float_format="%.17g")
    logger.info(f"Saved dataset with {n} items to {path}")
    return path


def read_header(path):
    """Header fields and the number of header lines (records marker included)."""
    path = Path(path)
    header = {}
    n_lines = 0
    with open(path) as f:
        for n_lines, line in enumerate(f, start=1):
            line = line.strip()
            if line == RECORDS_MARKER:
                break
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition(":")
            if not sep:
                raise ParseError("Expected 'key: value' header line", path=path, line=n_lines)
            header[key.strip()] = value.strip()
        else:
            if "version" not in header:
                raise ParseError("Missing section 'header'", path=path, field="version")
            raise ParseError("Missing section 'records'", path=path, line=n_lines, field="records")

    if "version" not in header:
        raise ParseError("Missing version header", path=path, line=1, field="version")
    if header["version"] != DATA_VERSION:
        raise VersionError(
            f"Unsupported dataset version '{header['version']}', expected '{DATA_VERSION}'",
            path=path,
            field="version",
        )
    for name in HEADER_FIELDS:
        if name not in header:
            raise ParseError(f"Missing header field '{name}'", path=path, field=name)
        try:
            header[name] = int(header[name])
        except ValueError:
            raise ParseError(f"Header field '{name}' is not an integer", path=path, field=name) from None
    header["seed"] = int(header.get("seed", 0))
    header.setdefault("fingerprint", "")
    return header, n_lines


def load_dataset(path):
    path = Path(path)
    header, n_header = read_header(path)
    n, T, N = header["n"], header["T"], header["n_input"]
    try:
        records = pd.read_csv(path, sep=" ", header=None, skiprows=n_header, dtype=np.float64)
    except pd.errors.EmptyDataError:
        records = pd.DataFrame(np.empty((0, 1 + T * N)))
    except pd.errors.ParserError as e:
        raise ParseError(f"Malformed record: {e}", path=path, field="records") from e
    except ValueError as e:
        raise ParseError(f"Non-numeric record value: {e}", path=path, field="records") from e

    if len(records) < n:
        raise ParseError(
            f"Section 'records' truncated: expected {n} records, found {len(records)}",
            path=path,
            line=n_header + len(records) + 1,
            field="records",
        )
    if len(records) > n:
        raise ParseError(f"Found {len(records)} records, header declares {n}", path=path, field="records")
    if records.shape[1] != 1 + T * N:
        raise ParseError(
            f"Records have {records.shape[1]} fields, expected 1 + T*N = {1 + T * N}",
            path=path,
            line=n_header + 1,
            field="records",
        )

    values = records.to_numpy()
    if np.any(np.isnan(values)):
        bad = int(np.flatnonzero(np.isnan(values).any(axis=1))[0])
        raise ParseError(
            "Section 'records' truncated: incomplete record", path=path, line=n_header + bad + 1, field="records"
        )
    labels = values[:, 0]
    if np.any(labels != np.round(labels)):
        raise ParseError("Labels must be integers", path=path, field="label")
    data = LabeledDataset(
        values[:, 1:].reshape(n, T, N),
        labels.astype(np.int64),
        header["n_classes"],
        header["seed"],
        header["fingerprint"],
    )
    logger.info(f"Loaded dataset with {n} items from {path}")
    return data


def dataset_header(path):
    header, _ = read_header(path)
    return header
