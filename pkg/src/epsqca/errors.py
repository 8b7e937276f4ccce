"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed arguments: bad intervals, unknown presets, invalid windows."""


class ResourceError(RuntimeError):
    """Requested dense or MPO object exceeds the configured size limits."""


class ComputationError(RuntimeError):
    """A numerical routine failed to converge or violated a checked invariant."""


class FitRejectedError(ComputationError):
    """Decay-constant fit produced a non-decaying rate; carries the diagnostics."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics
