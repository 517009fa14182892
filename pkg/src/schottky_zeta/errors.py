"""Exception types shared across the package.

Errors are split into three rough families: bad input data (words, letters,
group files), geometric preconditions that fail (non-hyperbolic elements,
overlapping discs), and numerical procedures that cannot certify their
result (lost zeros, uncertified cutoffs).  The CLI maps these onto exit
codes; see :mod:`schottky_zeta.cli`.
"""


class SchottkyZetaError(Exception):
    """Base class for all package-specific errors."""


class BadLetter(SchottkyZetaError):
    """A word letter is outside the alphabet 1..2r."""


class NonReducedWord(SchottkyZetaError):
    """A word contains an adjacent cancelling pair."""


class NotHyperbolic(SchottkyZetaError):
    """Operation requires |trace| > 2."""


class FixedPointAtInfinity(SchottkyZetaError):
    """The map fixes infinity (c = 0); no finite fixed-point pair exists."""


class DiscsNotSeparated(SchottkyZetaError):
    """Builder produced overlapping discs (lengths too small)."""


class OutsideDomain(SchottkyZetaError):
    """Point lies in no interval of the piecewise expanding map."""


class CutoffUncertain(SchottkyZetaError):
    """Measured contraction cannot certify completeness of an enumeration."""


class NodeEscapes(SchottkyZetaError):
    """A collocation node is mapped outside its target disc (invalid group data)."""


class NoConvergence(SchottkyZetaError):
    """Iteration failed to converge within the budget."""


class NoBracket(SchottkyZetaError):
    """Root finding found no sign change on the search bracket."""


class NonElementaryRequired(SchottkyZetaError):
    """Operation needs a non-elementary group (rank >= 2)."""


class DomainTooClose(SchottkyZetaError):
    """Geodesic series requested too close to the abscissa of convergence."""


class IncompletePrimitives(SchottkyZetaError):
    """Primitive-class list is not certified far enough for the request."""


class InvalidCover(SchottkyZetaError):
    """Cover description violates 1 <= k <= r or moduli >= 2."""


class BoundaryZero(SchottkyZetaError):
    """The function is (numerically) zero on the counting contour."""


class MaxDepth(SchottkyZetaError):
    """Contour subdivision exceeded its depth budget.

    Carries ``partial`` (the resonances located before giving up) so callers
    can report incomplete results.
    """

    def __init__(self, message, partial=()):
        super().__init__(message)
        self.partial = tuple(partial)


class LostZero(SchottkyZetaError):
    """Zero continuation failed.

    ``theta`` records the character point at which uniqueness or convergence
    broke down; ``partial`` holds the (theta, phi) pairs traced successfully
    before the failure.
    """

    def __init__(self, message, theta=None, partial=()):
        super().__init__(message)
        self.theta = theta
        self.partial = tuple(partial)


class IllConditioned(SchottkyZetaError):
    """Least-squares design matrix condition number exceeds the budget."""
