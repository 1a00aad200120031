"""
Synaptic and refractory filters of the spike response model.

Kernels are precomputed once per network and truncated at ``horizon`` time
steps. Index 0 of every kernel vector is the weight applied to the most
recent sample in a neuron's history:

- synaptic kernel: alpha[d] weighs the input observed d steps ago, the
  current step included (d = 0), so a spike affects the potential from its
  own time step onwards;
- refractory kernel: beta[d] weighs the neuron's own spike emitted d + 1
  steps ago, so the spike at t never feeds back into the potential at t.

All time constants are expressed in time steps.
"""

import math
from dataclasses import dataclass

import numpy as np

from spikecp.errors import InvalidParameterError

FIRST_ORDER = "first-order"
SECOND_ORDER = "second-order"
KERNEL_KINDS = (FIRST_ORDER, SECOND_ORDER)

# Kernel values below this magnitude are treated as negligible when picking
# a default truncation horizon.
NEGLIGIBLE = 1e-12

# Refractory constant quoted without a unit for event-camera digit models.
# Read as time steps it means an (almost) instantaneous reset.
LITERAL_TAU_REF = 0.0195


@dataclass(frozen=True)
class FilterKernel:
    kind: str = FIRST_ORDER
    tau_mem: float = 4.0
    tau_syn: float = 2.0
    tau_ref: float = 1.0
    horizon: int = 80

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InvalidParameterError(
                f"Unknown kernel kind '{self.kind}', expected one of {KERNEL_KINDS}"
            )
        for name in ("tau_mem", "tau_syn", "tau_ref"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be a positive finite number, got {value}")
        if self.kind == SECOND_ORDER and self.tau_mem == self.tau_syn:
            raise InvalidParameterError("second-order kernel needs tau_mem != tau_syn")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise InvalidParameterError(f"horizon must be a positive integer, got {self.horizon}")

    def synaptic(self):
        """Synaptic kernel alpha_1..alpha_h as a float64 vector."""
        t = np.arange(1, self.horizon + 1, dtype=np.float64)
        if self.kind == FIRST_ORDER:
            return np.exp(-(t - 1.0) / self.tau_mem)
        return np.exp(-t / self.tau_mem) - np.exp(-t / self.tau_syn)

    def refractory(self, threshold):
        """Refractory kernel beta_1..beta_h with gain -threshold (soft reset)."""
        t = np.arange(1, self.horizon + 1, dtype=np.float64)
        return -threshold * np.exp(-(t - 1.0) / self.tau_ref)

    def with_horizon(self, horizon):
        return FilterKernel(self.kind, self.tau_mem, self.tau_syn, self.tau_ref, int(horizon))

    def to_dict(self):
        return {
            "kind": self.kind,
            "tau_mem": float(self.tau_mem),
            "tau_syn": float(self.tau_syn),
            "tau_ref": float(self.tau_ref),
            "horizon": int(self.horizon),
        }

    @classmethod
    def from_dict(cls, values):
        return cls(
            kind=values["kind"],
            tau_mem=float(values["tau_mem"]),
            tau_syn=float(values["tau_syn"]),
            tau_ref=float(values["tau_ref"]),
            horizon=int(values["horizon"]),
        )


def default_horizon(kind, tau_mem, tau_syn, tau_ref, T):
    """Smallest horizon beyond which every kernel value is negligible, capped at T."""
    slowest = max(tau_mem, tau_ref, tau_syn if kind == SECOND_ORDER else 0.0)
    # exp(-(t - 1) / tau) < NEGLIGIBLE  <=>  t > 1 + tau * ln(1 / NEGLIGIBLE)
    needed = int(math.ceil(1.0 + slowest * math.log(1.0 / NEGLIGIBLE)))
    return max(1, min(int(T), needed))


def make_kernel(kind=FIRST_ORDER, tau_mem=4.0, tau_syn=2.0, tau_ref=1.0, T=80, horizon=None):
    """Build a kernel, picking the default horizon when none is given."""
    if horizon is None:
        horizon = default_horizon(kind, tau_mem, tau_syn, tau_ref, T)
    return FilterKernel(kind, float(tau_mem), float(tau_syn), float(tau_ref), int(horizon))
