"""Exception hierarchy shared by all qotto modules."""


class OttoError(Exception):
    """Base class for every error raised by qotto."""


class DegenerateField(OttoError, ValueError):
    """Omega = sqrt(omega**2 + J**2) vanishes; the energy frame is undefined."""


class InvalidBath(OttoError, ValueError):
    pass


class InvalidState(OttoError, ValueError):
    """A density matrix is not Hermitian, normalized and positive."""


class UnphysicalState(OttoError, ValueError):
    """A b-vector maps to a density matrix with a negative eigenvalue."""


class UndefinedTemperature(OttoError, ArithmeticError):
    pass


class PhaseUndefined(OttoError, ArithmeticError):
    pass


class DomainViolation(OttoError, ValueError):
    """Argument outside the admissible window of the analytic schedule."""


# raised mid-propagation; kept distinct so callers can tell it from bad input
class ScheduleViolation(DomainViolation):
    pass


class Singularity(DomainViolation):
    pass


class NotClosed(OttoError, RuntimeError):
    pass


class NoConvergence(OttoError, RuntimeError):
    pass


class ConfigError(OttoError, ValueError):
    pass
