"""Exception types raised by loraspect."""


class LoraspectError(Exception):
    """Base class for all loraspect errors."""


class ValidationError(LoraspectError, ValueError):
    """Rejected input: bad shapes, non-finite data, or out-of-range arguments."""


class ConvergenceError(LoraspectError):
    """An iterative decomposition failed to converge within its budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SafetensorsError(LoraspectError, ValueError):
    """Malformed safetensors container.

    ``tensor`` names the offending tensor when known; ``position`` is the
    byte offset of the problem when it can be localized.
    """

    def __init__(self, message, tensor=None, position=None):
        super().__init__(message)
        self.tensor = tensor
        self.position = position


class PlanError(LoraspectError, ValueError):
    """A pruning plan references layers that do not exist in the adapter."""

    def __init__(self, message, unknown_layers=()):
        super().__init__(message)
        self.unknown_layers = list(unknown_layers)
