"""Exception hierarchy.

``NumericalGuardError`` subclasses signal that a numerical premise (power
boundedness, conditioning, contraction, aliasing) was violated; the CLI maps
them to exit code 3.
"""


class ErgolabError(Exception):
    """Base class for all package errors."""


class DimensionError(ErgolabError, ValueError):
    """Basis or dimension mismatch between operands."""


class OffGridError(ErgolabError, ValueError):
    """Point evaluation of a grid function away from the grid."""


class Unsupported(ErgolabError, NotImplementedError):
    """Operation has no faithful finite-dimensional realization for this operator kind."""


class NonUnimodularGamma(ErgolabError, ValueError):
    """A Bohr weight frequency is off the unit circle."""


class CapExceeded(ErgolabError):
    """Minimal mode cutoff would exceed the caller's safety cap."""


class NumericalGuardError(ErgolabError):
    """A numerical premise of the computation failed."""


class AliasingError(NumericalGuardError, ValueError):
    """Grid too coarse for the declared mode content."""


class NotPowerBounded(NumericalGuardError):
    """Spectral radius above one or non-trivial Jordan structure on the unit circle."""


class IllConditionedEigenbasis(NumericalGuardError):
    """Eigenvector matrix condition number exceeds the accepted bound."""


class InstabilityError(NumericalGuardError):
    """Semigroup operator norm exceeds the contraction premise."""


class ClusterAmbiguity(NumericalGuardError):
    """Two eigenvalue clusters are neither clearly equal nor clearly separated."""


class ToleranceOverlap(NumericalGuardError):
    """A tuple product lies too close to the resonance tolerance to classify."""


class TupleLimitExceeded(NumericalGuardError):
    """Resonance enumeration would exceed the candidate-tuple guard."""


class NotDunfordSchwartz(ErgolabError, ValueError):
    """A chain operator failed the L1 / Linf contraction check."""
