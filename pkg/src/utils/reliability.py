"""
Error hierarchy and execution guards for the verification workbench.

A check that *fails* is reported, not raised. Exceptions are reserved for
input the workbench cannot work with at all (bad model files, ill-kinded
expressions, exhausted budgets); each carries a short hint for the CLI.
"""

import asyncio
import functools
import logging
from typing import Callable, TypeVar, Optional, Dict, Any

logger = logging.getLogger(__name__)

T = TypeVar('T')


class VerificationError(Exception):
    """Base exception with a user-facing hint and a process exit code."""

    def __init__(self, message: str, hint: str = None, exit_code: int = 2):
        self.message = message
        self.hint = hint or "Check the model file and command-line flags."
        self.exit_code = exit_code
        super().__init__(message)


class ConfigurationError(VerificationError):
    """Settings, flags or model parameters that cannot be used."""

    def __init__(self, detail: str):
        super().__init__(f"Configuration error: {detail}", "Fix the configuration value named above.")


class StepBudgetExceeded(VerificationError):
    """A reduction or rewrite did not terminate within the step budget."""

    def __init__(self, budget: int, where: str):
        super().__init__(
            f"{where} exceeded the step budget of {budget}",
            "The rule or relation set is probably non-terminating; raise STEP_BUDGET only if it is not.",
        )
        self.budget = budget


class SchemaError(VerificationError):
    """Model file failed validation."""

    def __init__(self, path: str, detail: str):
        super().__init__(f"Invalid model file {path}: {detail}", "Unknown keys are rejected; see models/ for examples.")
        self.path = path


class UnknownCheckError(VerificationError):
    def __init__(self, check_id: str):
        super().__init__(f"Unknown check: {check_id}", "Run with --help to list the check ids of each verb.")
        self.check_id = check_id


class GeneratorMismatchError(VerificationError):
    def __init__(self, detail: str = "operands live in different algebras"):
        super().__init__(f"Generator-set mismatch: {detail}")


class MissingImageError(VerificationError):
    def __init__(self, generator: str):
        super().__init__(f"Derivation has no image for generator {generator}")
        self.generator = generator


class DegreeMismatchError(VerificationError):
    def __init__(self, generator: str, expected: int, got: Optional[int]):
        super().__init__(f"Image of {generator} has degree {got}, expected {expected}")
        self.generator = generator
        self.expected = expected
        self.got = got


class PolynomialSyntaxError(VerificationError):
    def __init__(self, text: str, detail: str):
        super().__init__(f"Cannot parse polynomial {text!r}: {detail}")
        self.text = text


class ParseError(VerificationError):
    """Syntax error in the formal expression language."""

    def __init__(self, message: str, position: int, text: str = ""):
        pointer = f"\n  {text}\n  {' ' * position}^" if text else ""
        super().__init__(f"{message} at position {position}{pointer}", "See README.md for the expression grammar.")
        self.position = position


class KindError(VerificationError):
    def __init__(self, operator: str, detail: str):
        super().__init__(f"Ill-kinded application of {operator}: {detail}")
        self.operator = operator


class FirstClassError(VerificationError):
    def __init__(self, residues: Dict[str, Any]):
        listed = ", ".join(f"{k}: {v}" for k, v in residues.items())
        super().__init__(f"Constraints are not first class ({listed})", "Run `verify bfv --check bfv-first-class` for details.")
        self.residues = residues


class NonRegularConstraintError(VerificationError):
    def __init__(self, order: int, detail: str = ""):
        super().__init__(
            f"Contracting homotopy undefined at b-degree {order}{': ' + detail if detail else ''}",
            "The residual is not in the constraint ideal within the degree bound.",
        )
        self.order = order


class OrderBudgetExhausted(VerificationError):
    def __init__(self, max_order: int, residual: str):
        super().__init__(f"Master equation residual persists at max order {max_order}: {residual}")
        self.max_order = max_order
        self.residual = residual


class OddParameterError(VerificationError):
    def __init__(self, k: int, needed: int):
        super().__init__(f"{needed} odd parameters needed, only {k} available", "Pass --k with a larger value.")
        self.k = k
        self.needed = needed


class NonSPDError(VerificationError):
    def __init__(self, site: tuple):
        super().__init__(f"Metric is not positive definite at site {site}")
        self.site = site


class UnsupportedKindError(VerificationError):
    def __init__(self, kind: str):
        super().__init__(f"Unsupported field kind for Lie derivative: {kind}")
        self.kind = kind


class ReportWriteError(VerificationError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"Cannot write report file {path}: {reason}", "Check --out and directory permissions.")
        self.path = path


class CheckTimeoutError(VerificationError):
    def __init__(self, operation: str, timeout: int):
        super().__init__(f"{operation} timed out after {timeout}s; "
                         "its worker thread keeps running until the check returns",
                         "Raise CHECK_TIMEOUT or use smaller N.")


class StepCounter:
    """Counts work steps and raises once the budget is spent."""

    def __init__(self, budget: int, where: str):
        self.budget = budget
        self.where = where
        self.steps = 0

    def tick(self, n: int = 1):
        self.steps += n
        if self.steps > self.budget:
            raise StepBudgetExceeded(self.budget, self.where)


def with_timeout(timeout_seconds: float, operation_name: str = "Check"):
    """
    Decorator to add a timeout to an async function.

    Example:
        @with_timeout(600, "lattice brackets")
        async def run(...):
            ...
    """
    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @functools.wraps(func)
        async def wrapper(*args, **kwargs) -> T:
            try:
                return await asyncio.wait_for(
                    func(*args, **kwargs),
                    timeout=timeout_seconds
                )
            except asyncio.TimeoutError:
                raise CheckTimeoutError(operation_name, int(timeout_seconds))
        return wrapper
    return decorator
