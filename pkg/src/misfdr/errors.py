"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its allowed domain."""


class NotPositiveDefiniteError(ValueError):
    """Cholesky factorization failed even after the jitter retry."""


class BoundaryError(ValueError):
    """A statistic sits at 0 or 1, where the Gaussian quantile is infinite."""
