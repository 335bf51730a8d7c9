"""Exception hierarchy shared by all neuroloop modules."""


class NeuroloopError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(NeuroloopError, ValueError):
    """A physical parameter or operation argument is outside its domain."""


class ConfigError(NeuroloopError, ValueError):
    """A configuration value is invalid; the message starts with the field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class RoutingError(NeuroloopError, KeyError):
    """An address event refers to an unknown or invalid synapse address."""

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class StreamError(NeuroloopError, ValueError):
    """An event stream is malformed (unsorted, out of window, bad syntax)."""


class StabilityError(NeuroloopError, ValueError):
    """An integration step is too large for the explicit scheme."""


class LayoutError(NeuroloopError, ValueError):
    """A network does not fit on the target chip."""


class FieldFault(NeuroloopError, FloatingPointError):
    """A neural field state became non-finite."""
