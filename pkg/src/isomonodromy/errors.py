"""Exception hierarchy shared by all modules."""


class IsomonodromyError(Exception):
    """Base class for all library errors."""


class MalformedInputError(IsomonodromyError):
    """Input data violates a structural invariant (inconsistent multiplicities,
    bad JSON, mismatched shapes)."""


class PoleDomainError(IsomonodromyError):
    """Evaluation requested at (or too close to) a pole."""


class PreconditionError(IsomonodromyError):
    """A documented operation precondition does not hold (overlapping supports,
    clearance violation, enclosed extra pole, ...)."""


class RegularityError(IsomonodromyError):
    """Leading polar coefficient is not regular (clustered or resonant
    eigenvalues, nilpotent leading term)."""


class DegenerateChartError(IsomonodromyError):
    """The symplectic Gram matrix is singular beyond tolerance at this state."""


class IntegrationAbort(IsomonodromyError):
    """Adaptive integration could not continue.

    ``kind`` is one of ``'stiffness'``, ``'pole_collision'``,
    ``'movable_singularity'``.
    """

    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind
