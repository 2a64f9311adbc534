"""Exception hierarchy shared across the package."""


class AmsimError(Exception):
    """Base class for all package-specific errors."""


class InvalidStateError(AmsimError):
    """A configuration vector is malformed (wrong length, non-finite entries)."""


class InvalidArgumentError(AmsimError, ValueError):
    """An argument violates a documented precondition."""


class DegenerateParameterError(InvalidArgumentError):
    """A coupling parameter sits exactly on a bifurcation boundary."""


class ConfigError(AmsimError):
    """A run configuration file or override failed validation."""

    def __init__(self, message, *, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class ExtinctionError(AmsimError):
    """No surviving replica strictly exceeds the killed level; branching is impossible."""

    def __init__(self, iteration, message=None):
        super().__init__(message or f"extinction at iteration {iteration}")
        self.iteration = iteration


class AbsorbedTimeoutError(AmsimError):
    """A trajectory exhausted its step budget before absorption.

    Carries the partial run in ``partial_run``.
    """

    def __init__(self, partial_run, max_steps):
        super().__init__(f"run not absorbed within {max_steps} steps")
        self.partial_run = partial_run
        self.max_steps = max_steps


class NotConvergedError(AmsimError):
    """The splitting iteration hit its iteration cap before all replicas reached B."""

    def __init__(self, iterations, message=None):
        super().__init__(message or f"not converged after {iterations} iterations")
        self.iterations = iterations
