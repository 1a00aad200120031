"""
Non-conformity scores computed from rate-decoded SNN outputs.

Lower scores mean a class is more plausible. The local score only needs the
spike count of one output neuron; the global score needs the softmax across
all output neurons.
"""

from enum import Enum

import numpy as np

from spikecp.errors import InvalidParameterError

PROB_FLOOR = 1e-300


class NcScoreKind(str, Enum):
    LOCAL = "local"
    GLOBAL = "global"

    @classmethod
    def parse(cls, value):
        try:
            return cls(value.value if isinstance(value, cls) else str(value).lower())
        except ValueError:
            raise InvalidParameterError(f"Unknown NC score kind '{value}', expected 'local' or 'global'") from None


def local_nc_score(t, r_c):
    """s_c(x^t) = t - r_c(x^t)."""
    if r_c < 0 or r_c > t:
        raise InvalidParameterError(f"Spike count {r_c} violates 0 <= r_c <= t={t}")
    return float(t - r_c)


def global_nc_score(p_c):
    """s_c(x^t) = -ln p_c(x^t), with p_c floored at 1e-300."""
    if not p_c <= 1.0:
        raise InvalidParameterError(f"Probability {p_c} exceeds 1")
    return float(-np.log(max(float(p_c), PROB_FLOOR)))


def local_scores(times, counts):
    """Vectorized local scores; ``times`` broadcasts against the class axis."""
    counts = np.asarray(counts)
    times = np.asarray(times)[..., None]
    if np.any(counts < 0) or np.any(counts > times):
        raise InvalidParameterError("Spike counts violate 0 <= r_c <= t")
    return (times - counts).astype(np.float64)


def global_scores(probs):
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs > 1.0):
        raise InvalidParameterError("Probabilities exceed 1")
    return -np.log(np.maximum(probs, PROB_FLOOR))


def nc_scores(kind, times, counts, probs):
    """Per-class scores for every recorded time; shape follows ``counts``."""
    kind = NcScoreKind.parse(kind)
    if kind is NcScoreKind.LOCAL:
        return local_scores(times, counts)
    return global_scores(probs)


def trace_scores(trace, kind):
    """Scores (K, C) of one RunTrace at each of its recorded times."""
    return nc_scores(kind, trace.recorded_times, trace.spike_counts, trace.probs)


def batch_scores(batch, kind):
    """Scores (B, K, C) of a TraceBatch."""
    return nc_scores(kind, batch.recorded_times, batch.spike_counts, batch.probs)
