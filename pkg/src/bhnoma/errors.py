"""Exception and warning types raised across the package."""


class BHNomaError(Exception):
    """Base class for all package errors."""


class ParseError(BHNomaError):
    """A scenario file could not be parsed."""


class ValidationError(BHNomaError):
    """A configuration or plan violates a stated invariant.

    The message names the invariant, e.g. ``"B0 <= B"``.
    """


class OddUserCount(BHNomaError):
    """NOMA pairing needs an even number of users in the beam."""


class InactiveBeam(BHNomaError):
    """Interference was queried for a beam that is not lit in the slot."""


class InfeasibleMatching(BHNomaError):
    """A NOMA pair cannot share any subcarrier under the given K and Q."""


class NonPositiveLogArgument(BHNomaError):
    """The Dinkelbach surrogate was evaluated outside its log domain."""


class DegenerateCurve(BHNomaError):
    """An outage curve has zero entries and cannot be fitted on a log scale."""


class WindowExhausted(BHNomaError):
    """All slots of the hopping window are assigned.

    This is the normal termination signal of the slot allocator.
    """


class PlanViolation(ValidationError):
    """A resource plan breaks one of the scheduling constraints."""


class NoConvergence(UserWarning):
    """An iteration cap was hit; the best iterate is returned."""


class InfeasiblePowerSplit(UserWarning):
    """``a_m - eps_m * a_n <= 0``: SIC can never succeed, outage is 1."""
