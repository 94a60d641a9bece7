"""Exception hierarchy shared by every roughpat module."""


class RoughpatError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for this category."""

    exit_code = 1


class InvalidArgument(RoughpatError, ValueError):
    exit_code = 2


class ConfigError(InvalidArgument):
    exit_code = 2


class DegenerateSurfaceError(RoughpatError, ValueError):
    exit_code = 3


class SolverFailure(RoughpatError, RuntimeError):
    exit_code = 4


class DivergenceError(SolverFailure):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message, step=None, stage=None):
        super().__init__(message)
        self.step = step
        self.stage = stage


class DumpFormatError(RoughpatError, ValueError):
    exit_code = 5
