"""Exception types raised by uniquemax."""


class UniqueMaxError(Exception):
    """Base class for all uniquemax errors."""


class DimensionMismatch(UniqueMaxError, ValueError):
    def __init__(self, expected, got, what="point"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} dimension mismatch: expected {expected}, got {got}")


class BudgetExceeded(UniqueMaxError):
    """A requested grid or lattice would exceed the configured memory budget."""


class ZeroElementError(UniqueMaxError, ValueError):
    def __init__(self, msg="zero element has no maximum certificate"):
        super().__init__(msg)


class RankDeficient(UniqueMaxError):
    """Sampled basis is numerically dependent on the grid."""

    def __init__(self, msg, singular_values=None):
        self.singular_values = singular_values
        super().__init__(msg)


class NotAlternating(UniqueMaxError):
    """A probed element failed to take both signs; carries the offending coefficients."""

    def __init__(self, coefs, msg=None):
        self.coefs = coefs
        super().__init__(msg or f"element with coefficients {[float(c) for c in coefs]} is not alternating")


class SeparationError(UniqueMaxError):
    """No functional strictly positive on the sampled nonnegative cone was found."""


class EnvelopeTooSlow(UniqueMaxError):
    def __init__(self, index, family, radius):
        self.index = index
        self.family = family
        self.radius = radius
        super().__init__(
            f"basis function {index} ({family}) does not decay below the threshold "
            f"within radius {radius:g}"
        )


class PreconditionError(UniqueMaxError, ValueError):
    """An operation was called outside its domain."""
