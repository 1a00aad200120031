"""
Event-list ingestion for neuromorphic recordings.

One event per line, ``t channel polarity``; ``#`` starts a comment. Event
times are integrated over T equal intervals of ``duration`` (default: the
last event time) and the per-step counts are clipped to [0, 1]. Channels must
be integers and no event may fall after ``duration``. With
``split_polarity`` OFF events (polarity <= 0) land on channel + n_channels.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from spikecp.errors import InvalidParameterError, ParseError

logger = logging.getLogger(__name__)


def load_events(path, T, n_channels, duration=None, split_polarity=False):
    path = Path(path)
    try:
        events = pd.read_csv(
            path, sep=r"\s+", comment="#", header=None, names=["t", "channel", "polarity"], engine="python"
        )
    except pd.errors.EmptyDataError:
        events = pd.DataFrame(columns=["t", "channel", "polarity"])
    except pd.errors.ParserError as e:
        raise ParseError(f"Malformed event list: {e}", path=path) from e

    n_features = 2 * n_channels if split_polarity else n_channels
    x = np.zeros((int(T), n_features))
    if events.empty:
        logger.warning(f"No events in {path}; returning an all-zero sequence")
        return x

    if events.isna().any().any():
        bad = int(np.flatnonzero(events.isna().any(axis=1).to_numpy())[0])
        raise ParseError("Event needs three fields: t channel polarity", path=path, line=bad + 1)
    try:
        times = events["t"].to_numpy(dtype=np.float64)
        channel_values = events["channel"].to_numpy(dtype=np.float64)
        polarity = events["polarity"].to_numpy(dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ParseError(f"Non-numeric event field: {e}", path=path) from e
    fractional = np.flatnonzero(channel_values != np.floor(channel_values))
    if fractional.size:
        raise ParseError(
            f"Event channel must be an integer, got {channel_values[fractional[0]]}",
            path=path,
            line=int(fractional[0]) + 1,
        )
    channels = channel_values.astype(np.int64)
    if np.any(times < 0) or np.any(channels < 0) or np.any(channels >= n_channels):
        raise ParseError(f"Event time must be >= 0 and channel in 0..{n_channels - 1}", path=path)

    if duration is None:
        duration = float(times.max()) if times.max() > 0 else 1.0
    if not duration > 0:
        raise InvalidParameterError(f"duration must be positive, got {duration}")
    late = np.flatnonzero(times > duration)
    if late.size:
        raise ParseError(
            f"Event at t={times[late[0]]} lies after the recording duration {duration}",
            path=path,
            line=int(late[0]) + 1,
        )

    # t == duration belongs to the last step
    steps = np.clip(np.floor(times * T / duration).astype(np.int64), 0, int(T) - 1)
    features = channels + (n_channels * (polarity <= 0) if split_polarity else 0)
    np.add.at(x, (steps, features), 1.0)
    logger.info(f"Aggregated {len(events)} events from {path} into {T} steps")
    return np.clip(x, 0.0, 1.0)
