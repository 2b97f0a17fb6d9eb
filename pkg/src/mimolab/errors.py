"""Exception types raised across the package."""


class MimoLabError(Exception):
    """Base class; ``kind`` is the token printed on the CLI error line."""

    kind = "error"


class ConfigError(MimoLabError, ValueError):
    kind = "invalid-config"


class DimensionError(MimoLabError, ValueError):
    kind = "dimension-mismatch"


class ValidityError(MimoLabError, ValueError):
    """A closed-form bound is undefined for the supplied parameters."""

    kind = "invalid-bound"


class IllConditionedError(MimoLabError, ArithmeticError):
    kind = "ill-conditioned"


class ConvergenceError(MimoLabError, ArithmeticError):
    kind = "no-convergence"

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class UnattainableError(MimoLabError, ValueError):
    kind = "unattainable"
