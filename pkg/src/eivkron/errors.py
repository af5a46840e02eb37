"""Exception hierarchy shared across the package."""


class EivkronError(Exception):
    """Base class for all package errors."""


class InvalidInput(EivkronError, ValueError):
    """Malformed, non-finite or dimensionally inconsistent input."""


class NotPSD(InvalidInput):
    """A matrix required to be positive semidefinite is not."""


class TooLarge(EivkronError):
    """A requested computation exceeds its configured size cap."""


class DegenerateA(InvalidInput):
    """The column covariance has a zero (or negative) smallest eigenvalue."""


class InvalidConfig(EivkronError, ValueError):
    """A study or CLI configuration is malformed or degenerate."""
