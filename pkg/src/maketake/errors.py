"""Exception types shared across the package."""


class MakeTakeError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MakeTakeError):
    """Malformed configuration input (unknown key, wrong type, bad file)."""


class NonPositiveParameter(MakeTakeError):
    """A parameter that must be strictly positive is not."""


class EmptyGammaVector(MakeTakeError):
    """No agent risk aversions were supplied."""


class ReservationNotNegative(MakeTakeError):
    """Reservation utilities must be strictly negative."""


class CoveringMisconfigured(MakeTakeError):
    """Covering cells or their weights are inconsistent."""


class NonPositiveKVarpi(MakeTakeError):
    """k * varpi must be strictly positive for the equilibrium closed forms."""


class NoEquilibriumOnGrid(MakeTakeError):
    """The brute-force search found no grid profile free of improving deviations."""


class StepRejected(MakeTakeError):
    """The backward integrator lost positivity/finiteness even at the minimum step."""


class StateSpaceTooLarge(MakeTakeError):
    """The inventory state space exceeds the configured hard cap."""


class SideBlocked(MakeTakeError):
    """Every best-quoter candidate is inventory-blocked on the requested side."""


class ApproximationOutOfRange(MakeTakeError):
    """A closed-form approximation was evaluated outside its valid regime."""


class ValueFunctionCoverageGap(MakeTakeError):
    """A simulated state fell outside the solved value-function grid."""
