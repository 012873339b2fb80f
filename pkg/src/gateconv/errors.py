"""Exception types shared across the package."""


class GateconvError(Exception):
    """Base class for all package errors."""


class InputError(GateconvError, ValueError):
    """Malformed or out-of-contract input (unknown gate name, bad JSON, ...)."""


class NonUnitaryError(InputError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class DimensionMismatchError(InputError):
    pass


class NumericalError(GateconvError, ArithmeticError):
    """An iterative kernel failed to reach its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ImpossibleRankError(GateconvError):
    """A two-qubit gate produced a Choi Schmidt number of 3, which cannot happen."""

    def __init__(self, spectrum):
        super().__init__(
            "two-qubit Choi state with Schmidt number 3 (tolerance misconfigured?): "
            f"spectrum={list(spectrum)}"
        )
        self.spectrum = tuple(spectrum)


class InfeasibleConversionError(GateconvError):
    """Requested conversion violates the Schmidt-number ordering."""

    def __init__(self, source_rank: int, target_rank: int, message: str | None = None):
        super().__init__(
            message
            or f"infeasible conversion: source Schmidt number {source_rank} < target Schmidt number {target_rank}"
        )
        self.source_rank = source_rank
        self.target_rank = target_rank


class GateUseError(GateconvError):
    """A protocol tried to apply its single-use gate resource more than once."""
