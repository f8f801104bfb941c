class RankPrecondError(Exception):
    """Base rankprecond error."""

    pass


class DimensionMismatch(RankPrecondError):
    """Vector or matrix dimensions are not compatible."""

    pass


class CornerMismatch(RankPrecondError):
    """Defining vectors disagree on the shared corner entry."""

    pass


class QuadratureUnderResolved(RankPrecondError):
    """Too few quadrature points for the requested matrix size."""

    pass


class DenseCapExceeded(RankPrecondError):
    """Dense realization requested above the configured size cap."""

    pass


class UnsupportedHartleyIndex(RankPrecondError):
    """Hartley index has no second generator characterization."""

    pass


class NotAOneSpace(RankPrecondError):
    """Algebra elements are not determined by their first row."""

    pass


class StructureViolation(RankPrecondError):
    """Matrix lacks the symmetry required by the formula."""

    pass


class UnsupportedCombination(RankPrecondError):
    """No bounded-rank commutator formula for this matrix and algebra."""

    pass


class OracleUnsupported(UnsupportedCombination):
    """Entry oracle cannot serve the requested approximation."""

    pass


class DiagonalRequested(RankPrecondError):
    """Diagonal entries are not served by the entry oracle."""

    pass


class UncomputablePosition(RankPrecondError):
    """No generator ladder separates the requested pair of eigenvalues."""

    pass


class DegenerateDenominator(RankPrecondError):
    """All ladder denominators vanished for a position expected computable."""

    pass


class RankBudgetExhausted(RankPrecondError):
    """Cross approximation reached the rank budget before the tolerance."""

    def __init__(self, message, skeleton=None, residual=None):
        super().__init__(message)
        self.skeleton = skeleton
        self.residual = residual


class PoleAtPhi(RankPrecondError):
    """Splitting coefficient has a pole at the algebra parameter."""

    pass


class DuplicateRoots(RankPrecondError):
    """Denominator roots are not distinct."""

    pass


class DegreeViolation(RankPrecondError):
    """Numerator degree is not lower than denominator degree."""

    pass


class IllConditionedChi(RankPrecondError):
    """Polynomial system for the power symbol is not satisfied."""

    pass


class FitFailed(RankPrecondError):
    """Exponential sum fit did not reach the requested accuracy."""

    pass


class SingularDiagonal(RankPrecondError):
    """Preconditioner eigenvalue vector has a zero entry."""

    pass


class SingularCapacitance(RankPrecondError):
    """Woodbury capacitance matrix is singular."""

    pass


class NotConverged(RankPrecondError):
    """Krylov solver stopped before reaching the tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonHermitianInput(RankPrecondError):
    """Conjugate gradients requires a Hermitian matrix."""

    pass


class ConfigError(RankPrecondError):
    """Campaign configuration is invalid."""

    pass


class KroneckerLowRankWarning(UserWarning):
    """Hankel matrix from a rational symbol is itself of low rank."""

    pass
