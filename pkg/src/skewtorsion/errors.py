"""Exception hierarchy shared by every module of the toolkit."""

from __future__ import annotations


class SkewTorsionError(Exception):
    """Base class for all toolkit errors."""


class ContractViolation(SkewTorsionError, ValueError):
    """An input violates the precondition of an operation."""


class DimensionMismatch(ContractViolation):
    """Operands live in spaces of different dimension."""


class DegenerateRankError(SkewTorsionError):
    """The numerical rank of a matrix cannot be decided from its singular values.

    ``kept`` is the smallest singular value above the cutoff and ``dropped``
    the largest one below it.
    """

    def __init__(self, kept: float, dropped: float, message: str | None = None):
        self.kept = kept
        self.dropped = dropped
        super().__init__(
            message
            or f"ambiguous rank: smallest kept singular value {kept:.3e} vs largest dropped {dropped:.3e}"
        )


class DegenerateDecompositionError(SkewTorsionError):
    """Eigenvalue clustering of a commutant element is ambiguous."""


class InconclusiveDefectError(SkewTorsionError):
    """A defect falls in the band between "zero" and "definitely nonzero"."""

    def __init__(self, name: str, value: float, lower: float, upper: float):
        self.name = name
        self.value = value
        self.lower = lower
        self.upper = upper
        super().__init__(f"{name} = {value:.3e} lies in the inconclusive band ({lower:.1e}, {upper:.1e}]")


class InternalInconsistencyError(SkewTorsionError):
    """A computed object fails an invariant that holds by construction."""


class NotABracketError(SkewTorsionError):
    """A three-form fails the Jacobi identity, so it does not define a Lie bracket."""
