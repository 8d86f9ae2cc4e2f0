"""Exception types raised by the estimator."""


class SparseSpecError(Exception):
    """Base class for all library errors."""


class NotCoprime(SparseSpecError):
    """The undersampling stride and the shift must be coprime."""


class DegenerateGenerator(SparseSpecError):
    """Generator magnitude too small to carry a usable angle."""


class NoIntersection(SparseSpecError):
    """No candidate pair closer than the matching tolerance."""


class NoUniqueIntersection(SparseSpecError):
    """Second-best candidate pair too close to the best one."""


class IndexBudgetExceeded(SparseSpecError):
    """Stream extraction would index past the end of the signal."""


class BadShape(SparseSpecError):
    """Matrix or sequence dimensions outside the supported range."""


class NoConvergence(SparseSpecError):
    """Iterative kernel failed to converge within its sweep cap."""


class SvdFailure(SparseSpecError):
    """SVD of a pencil matrix failed."""


class IllConditionedPencil(SparseSpecError):
    """Reduced pencil matrix numerically singular."""


class IllConditionedVandermonde(SparseSpecError):
    """Vandermonde system too ill-conditioned to solve reliably."""
