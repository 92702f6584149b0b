"""Exception types raised by the detection routines.

Every error derives from :class:`DetectionError`, itself a ``ValueError`` so
that callers using scikit-learn style ``except ValueError`` keep working.
"""


class DetectionError(ValueError):
    """Base class for all input and contract violations."""


class DimensionMismatch(DetectionError):
    pass


class SubmatrixTooLarge(DetectionError):
    pass


class NonFiniteEntry(DetectionError):
    pass


class IndexOutOfBounds(DetectionError):
    pass


class OutOfRange(DetectionError):
    pass


class DegenerateShape(DetectionError):
    """Raised when p = 1 or q = 1 makes a boundary formula vanish."""


class DenseRegime(DetectionError):
    """The unstructured boundary is only defined for beta in (1/2, 1)."""


class BudgetExceeded(DetectionError):
    def __init__(self, count, budget):
        self.count = count
        self.budget = budget
        super().__init__(
            f"enumeration needs {count} candidate submatrices, budget is {budget}"
        )


class EmptyGrid(DetectionError):
    pass


class GridInfeasible(DetectionError):
    pass


class DegenerateInput(DetectionError):
    pass


class AllZero(DetectionError):
    pass


class SupportViolation(DetectionError):
    pass


class SearchDidNotConverge(RuntimeError):
    """Alternating search hit its iteration guard (indicates a logic bug)."""
