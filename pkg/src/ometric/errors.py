"""Exception hierarchy shared across the package."""


class OMetricError(Exception):
    """Base class for every error raised by the toolkit."""


class ParameterError(OMetricError, ValueError):
    pass


class DomainError(OMetricError, ValueError):
    pass


class TreeDomainError(DomainError):
    """An intermediate ω-composition left the interval ``I_a``.

    ``subtree`` is the offending subtree and ``value`` the escaping value.
    """

    def __init__(self, message, subtree=None, value=None):
        super().__init__(message)
        self.subtree = subtree
        self.value = value


class RangeError(OMetricError, ValueError):
    pass


class PatternError(OMetricError, ValueError):
    pass


class ConstructionError(OMetricError, ValueError):
    pass


class OrientationError(OMetricError, ValueError):
    pass


class NotMetrizableError(OMetricError, ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ProblemError(OMetricError, ValueError):
    pass


class AdmissibilityError(OMetricError, ValueError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(OMetricError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
