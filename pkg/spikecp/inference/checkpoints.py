"""Checkpoint sets: the pre-registered times at which SpikeCP may stop."""

from dataclasses import dataclass

from spikecp.errors import InvalidParameterError


@dataclass(frozen=True)
class CheckpointSet:
    times: tuple
    T: int

    def __post_init__(self):
        times = tuple(sorted({int(t) for t in self.times}))
        if not times:
            raise InvalidParameterError("Checkpoint set must not be empty")
        if times[0] < 1 or times[-1] > self.T:
            raise InvalidParameterError(f"Checkpoints must lie in 1..{self.T}, got {list(times)}")
        if times[-1] != self.T:
            raise InvalidParameterError(f"Checkpoint set must include the last time T={self.T}")
        object.__setattr__(self, "times", times)

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(self.times)

    @classmethod
    def equally_spaced(cls, T, count):
        """{T/m, 2T/m, ..., T}; for counts that do not divide T the times are floored."""
        count = int(count)
        if not 1 <= count <= T:
            raise InvalidParameterError(f"Checkpoint count must lie in 1..{T}, got {count}")
        return cls(tuple((k * T) // count for k in range(1, count + 1)), int(T))

    @classmethod
    def parse(cls, spec, T):
        """An integer count (equally spaced) or an explicit list of times."""
        if isinstance(spec, CheckpointSet):
            return spec
        if isinstance(spec, (list, tuple)):
            return cls(tuple(spec), int(T))
        if isinstance(spec, str) and "," in spec:
            return cls(tuple(int(part) for part in spec.split(",") if part.strip()), int(T))
        return cls.equally_spaced(int(T), int(spec))
