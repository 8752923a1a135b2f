"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid scenario configuration or config file."""


class DimensionError(ValueError):
    """Channel or phase arrays with inconsistent shapes."""


class InfeasibleError(RuntimeError):
    """An optimization problem has no point satisfying its constraints.

    ``diagnosis`` carries a short human-readable explanation and, where
    available, the best-effort quantities that establish infeasibility.
    """

    def __init__(self, message, diagnosis=None):
        super().__init__(message)
        self.diagnosis = diagnosis or {}
