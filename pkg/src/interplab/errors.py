"""Exception types shared across the package."""


class InterplabError(Exception):
    """Base class for errors raised by this package."""


class FactorizationError(InterplabError):
    """A matrix factorization (SVD/eigendecomposition) failed to converge."""


class SingularGramError(InterplabError):
    """A Gram matrix that must be invertible is numerically singular."""


class NotPositiveDefiniteError(InterplabError):
    """A matrix required to be (semi)definite fails the definiteness check."""


class NonSeparableError(InterplabError):
    """A classification sample admits no separating direction."""


class CsvFormatError(InterplabError):
    """A CSV file does not conform to the documented layout."""


class DivergenceError(InterplabError):
    """An optimizer run diverged (non-finite or exploding loss).

    Carries the last finite iterate and the iteration at which divergence
    was detected so callers can inspect or record the partial run.
    """

    def __init__(self, message, w_last=None, iteration=None, trajectory=None):
        super().__init__(message)
        self.w_last = w_last
        self.iteration = iteration
        self.trajectory = trajectory


class LineSearchError(InterplabError):
    """Backtracking line search exhausted its halving budget."""


class OptimizationError(InterplabError):
    """An auxiliary optimization routine failed (non-finite objective, ...)."""


class ConfigError(InterplabError):
    """An experiment configuration file is malformed or inconsistent."""
