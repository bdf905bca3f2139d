"""Exception types shared across the package."""


class FiniteGapError(ValueError):
    """Invalid band-set input (overlap, touching or empty bands, non-finite data)."""


class DomainError(ValueError):
    """Evaluation point outside the domain an operation is defined on."""


class MeasureError(ValueError):
    """A spectral measure violates its invariants (negative density, bad mass)."""


class AccuracyError(RuntimeError):
    """A quadrature or iteration failed to reach the requested tolerance."""
