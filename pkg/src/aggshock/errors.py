"""Exception hierarchy shared by all modules."""


class AggShockError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AggShockError, ValueError):
    """An argument lies outside the domain of a formula."""


class SingularDesign(AggShockError):
    """A regression design matrix is rank deficient."""


class SingularMatrix(AggShockError):
    """A square matrix could not be inverted."""


class SingularJacobian(SingularMatrix):
    """The stacked moment Jacobian is singular."""


class NoBracket(AggShockError):
    """A root or minimum could not be bracketed."""


class EvaluationError(AggShockError):
    """A function returned a non-finite value."""


class DegenerateSample(AggShockError):
    """A sample statistic needed by an estimator is degenerate."""


class ThetaOutOfRange(AggShockError):
    """The choice index is at or above one, so log(1 - theta) is undefined."""


class NoFixedPoint(AggShockError):
    """The education-share equation has no sign change on the search interval."""


class IoError(AggShockError, OSError):
    """An output file could not be written."""


class ConfigError(AggShockError, ValueError):
    """A configuration file or flag is invalid."""
