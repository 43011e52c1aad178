"""Exception hierarchy shared by the solver, the diagnostics and the CLI."""


class TamedNSError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TamedNSError, ValueError):
    """Invalid configuration, mismatched grids, or violated preconditions."""

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class BlowUpError(TamedNSError, RuntimeError):
    """The adaptive step fell below ``dt_min`` or the state became non-finite."""

    def __init__(self, t, sup_u, message="time step collapsed"):
        self.t = float(t)
        self.sup_u = float(sup_u)
        super().__init__(f"{message} at t={self.t:.6g} (sup|u|={self.sup_u:.6g})")
