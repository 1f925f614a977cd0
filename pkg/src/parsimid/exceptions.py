"""Exception types raised across the identification pipeline."""

from __future__ import annotations


class ParsimIdError(ValueError):
    """Base class for all library errors."""


class ModelInvariantError(ParsimIdError):
    """A state-space model violates a structural invariant (stability,
    minimality, noise covariance shape)."""


class RankDeficiencyError(ParsimIdError):
    """A regressor (or state estimate) is numerically rank deficient, so the
    requested least-squares problem has no unique solution.

    Attributes:
        block: index of the offending regression block, or None.
        sigma_min: smallest singular value of the regressor.
        sigma_max: largest singular value of the regressor.
    """

    def __init__(self, message: str, *, block: int | None = None,
                 sigma_min: float = 0.0, sigma_max: float = 0.0):
        super().__init__(message)
        self.block = block
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max


class NotPositiveDefiniteError(ParsimIdError):
    """A matrix required to be (strictly) positive definite is not.

    Attributes:
        min_eigenvalue: the offending smallest eigenvalue.
    """

    def __init__(self, message: str, *, min_eigenvalue: float = 0.0):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ConvergenceError(ParsimIdError):
    """An iterative solver did not reach its tolerance.

    Attributes:
        residual: last residual observed before giving up.
    """

    def __init__(self, message: str, *, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class OrderTieError(ParsimIdError):
    """The singular values at the requested model-order cut are numerically
    tied, so the rank truncation is ambiguous."""


class DataFormatError(ParsimIdError):
    """An on-disk artifact (trajectory CSV, config file, results CSV) does not
    match its schema.

    Attributes:
        line: 1-based line number of the first offending record, if known.
    """

    def __init__(self, message: str, *, line: int | None = None):
        super().__init__(message)
        self.line = line


class SearchLimitError(ParsimIdError):
    """An integer threshold search exceeded its cap (the requested confidence
    or problem dimensions push the threshold beyond tractable range)."""
