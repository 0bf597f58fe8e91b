"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BalanceError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(BalanceError):
    """Malformed or inconsistent input data (TSV rows, annotation records, predictions)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SpanMatchError(BalanceError):
    """A coreferent candidate could not be matched to any annotated name span."""

    def __init__(self, example_id: str):
        super().__init__(
            f"coreferent candidate of example {example_id!r} matches no annotated name span"
        )
        self.example_id = example_id


class BuildError(BalanceError):
    """Invalid request to the LP builder (duplicate labels, empty groups, bad multiplicity)."""


class InfeasibleError(BalanceError):
    """The balancing LP has no feasible weight assignment."""

    def __init__(self, message: str, infeasibility: float | None = None):
        if infeasibility is not None:
            message = f"{message} (phase-1 infeasibility {infeasibility:.3e})"
        super().__init__(message)
        self.infeasibility = infeasibility


class SolverError(BalanceError):
    """The solver failed to reach a conclusive status (iteration limit, numerical trouble)."""


class StaleWeightsError(BalanceError):
    """A weight file violates its group-sum invariant or does not cover the evaluated examples."""


class UndefinedMetricError(BalanceError):
    """A metric is undefined for the given inputs (empty group, zero denominator)."""
