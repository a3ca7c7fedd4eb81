"""Exception hierarchy for stiffmod."""


class StiffmodError(Exception):
    """Base class for all package errors."""


class ModelError(StiffmodError, ValueError):
    pass


class SingularMassError(ModelError):
    pass


class ConstraintError(ModelError):
    pass


class DomainError(StiffmodError, ValueError):
    pass


class MissingBasisError(StiffmodError):
    pass


class StabilityError(StiffmodError):
    """Step size does not resolve the fastest active mode."""


class NoSignChangeError(StiffmodError):
    pass


class TooFewEventsError(StiffmodError):
    pass


class ConfigError(StiffmodError):
    pass
