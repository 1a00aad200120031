"""Names of the inference policies understood by the harness and the CLI."""

from enum import Enum

from spikecp.errors import InvalidParameterError


class Policy(str, Enum):
    SPIKECP_LOCAL = "spikecp-local"
    SPIKECP_GLOBAL = "spikecp-global"
    DCSNN = "dcsnn"
    DCSNN_NAIVE = "dcsnn-naive"
    STATIC_POINT = "static-point"

    @classmethod
    def parse(cls, value):
        try:
            return cls(value.value if isinstance(value, cls) else str(value).lower())
        except ValueError:
            names = ", ".join(p.value for p in cls)
            raise InvalidParameterError(f"Unknown policy '{value}', expected one of: {names}") from None

    @property
    def is_set_policy(self):
        return self in (Policy.SPIKECP_LOCAL, Policy.SPIKECP_GLOBAL)

    @property
    def score_kind(self):
        """NC score kind of a SpikeCP policy ('local' or 'global')."""
        if not self.is_set_policy:
            raise InvalidParameterError(f"Policy '{self.value}' does not use NC scores")
        return self.value.split("-", 1)[1]
