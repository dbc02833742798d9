"""Exception types raised by phasebeam."""


class PhaseBeamError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(PhaseBeamError, ValueError):
    pass


class DerivativeOrderError(PhaseBeamError, ValueError):
    pass


class UnsupportedOrder(PhaseBeamError, ValueError):
    pass


class IntegrationDiverged(PhaseBeamError, FloatingPointError):
    """Raised when an integrated state stops being finite.

    ``last_time`` is the last time at which the state was still finite.
    """

    def __init__(self, message, last_time):
        super().__init__(f"{message} (last finite state at t={last_time:.6g})")
        self.last_time = last_time


class SingularLevelSet(PhaseBeamError, ArithmeticError):
    """g_p became numerically singular; the theory forbids this, so it
    points at an integrator fault."""


class ConsistencyViolation(PhaseBeamError, ArithmeticError):
    pass


class OutOfDomain(PhaseBeamError, ValueError):
    pass


class DomainTooSmall(PhaseBeamError, RuntimeError):
    pass


class ConfigError(PhaseBeamError, ValueError):
    pass
