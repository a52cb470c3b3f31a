"""Numerical errors."""

from typing import Self


class PlanefieldError(Exception):
    """Base error, carries the name of the failing operation."""

    operation: str


class SeriesDivergenceError(PlanefieldError):
    """Series did not converge within its term budget."""

    def __init__(self: Self, operation: str, terms: int, detail: str = "") -> None:
        msg = f"{operation}: series did not converge after {terms} terms"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.operation = operation
        self.terms = terms


class CancellationError(PlanefieldError):
    """Alternating series lost too many digits to cancellation."""

    def __init__(self: Self, operation: str, estimate: float) -> None:
        super().__init__(
            f"{operation}: estimated cancellation error {estimate:.3g} is too large, "
            "use a smaller argument"
        )
        self.operation = operation
        self.estimate = estimate


class GammaPoleError(PlanefieldError):
    """Gamma function pole in a series numerator."""

    def __init__(self: Self, operation: str, argument: float) -> None:
        super().__init__(f"{operation}: numerator Gamma pole at argument {argument}")
        self.operation = operation
        self.argument = argument


class DomainError(PlanefieldError):
    """Argument outside the accepted domain."""

    def __init__(self: Self, operation: str, detail: str) -> None:
        super().__init__(f"{operation}: {detail}")
        self.operation = operation


class QuadratureError(PlanefieldError):
    """Adaptive quadrature reported a problem."""

    def __init__(self: Self, operation: str, detail: str) -> None:
        super().__init__(f"{operation}: quadrature failed: {detail}")
        self.operation = operation
