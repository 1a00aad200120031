"""Exception hierarchy shared by all SpikeCP modules."""


class SpikeCPError(Exception):
    """Base class for every error raised by the package."""


class ShapeError(SpikeCPError, ValueError):
    """Array dimensions do not match the network or dataset."""


class NonFiniteInputError(SpikeCPError, ValueError):
    """Input contains NaN or infinite entries."""


class InvalidParameterError(SpikeCPError, ValueError):
    """A scalar argument is outside its allowed range."""


class ParseError(SpikeCPError):
    """Malformed model, dataset, event or config file."""

    def __init__(self, message, path=None, line=None, field=None):
        self.path = str(path) if path is not None else None
        self.line = line
        self.field = field
        context = []
        if self.path:
            context.append(self.path)
        if line is not None:
            context.append(f"line {line}")
        if field:
            context.append(f"field '{field}'")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class VersionError(ParseError):
    """File declares a format version this package cannot read."""


class ConfigError(SpikeCPError):
    """Experiment configuration is missing, unreadable or invalid."""

    def __init__(self, message, path=None):
        self.path = str(path) if path is not None else None
        if self.path:
            message = f"{message}: {self.path}"
        super().__init__(message)


class TrainingDivergedError(SpikeCPError, RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, epoch, batch, loss):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(
            f"Training diverged at epoch {epoch}, batch {batch}: loss={loss}; "
            f"try a smaller learning rate or surrogate slope"
        )
