"""Exception types shared across the package."""


class ThermoflowError(Exception):
    """Base class for all package-specific errors."""


class DomainError(ThermoflowError):
    """Invalid geometric data or an evaluation failure of user-supplied fields."""


class IntegrationError(ThermoflowError):
    """ODE integration failed; carries the last time that was reached."""

    def __init__(self, message, last_time=None):
        super().__init__(message)
        self.last_time = last_time


class ConjugatePointError(ThermoflowError):
    """A boundary-value solve hit (or crossed) a conjugate point.

    ``horizon`` is the offending boundary time, when known.
    """

    def __init__(self, message, horizon=None):
        super().__init__(message)
        self.horizon = horizon


class PreconditionError(ThermoflowError):
    """An operation's stated precondition failed; nothing was silently fixed."""


class RefinementError(ThermoflowError):
    """A sampling-density contract could not be met by refinement."""


class ConfigError(ThermoflowError):
    """Run-configuration validation failure (carries a best-effort line number)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
