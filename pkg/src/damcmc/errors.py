"""Exception types shared across the package."""


class DamcmcError(Exception):
    """Base class for all package-specific errors."""


class NonFiniteInput(DamcmcError):
    """A matrix or vector contained NaN or Inf entries."""


class NotPositiveDefinite(DamcmcError):
    """Cholesky factorization failed even after diagonal jitter escalation."""


class DimensionMismatch(DamcmcError):
    """Operands have incompatible shapes."""


class InsufficientSamples(DamcmcError):
    """Too few samples for the requested estimator."""


class InvalidDimension(DamcmcError):
    """A model dimension violates its constraints (e.g. k < 3 for the synthetic DGP)."""


class DegenerateWeightMatrix(DamcmcError):
    """The moment weighting matrix at a parameter value is not factorizable."""


class InitializationDegenerate(DamcmcError):
    """The chain's initial state has a degenerate weighting matrix.

    The sampler cannot start without a valid factorization at the initial
    state; choose a different initialization.
    """


class NoPromotions(DamcmcError):
    """No proposal reached the second stage, so stage-two statistics are undefined."""


class EmptyInput(DamcmcError):
    """An empty collection was passed where at least one element is required."""


class MissingColumn(DamcmcError):
    """A required CSV column is absent from the file header."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"required column {name!r} not found in CSV header")


class MalformedRow(DamcmcError):
    """A CSV row failed validation; carries the 1-based line number."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")
