"""Exception hierarchy shared by all modules."""


class ChangePointError(Exception):
    """Base class for every error raised by this package."""


class NotPositiveDefinite(ChangePointError):
    pass


class ConvergenceFailure(ChangePointError):
    pass


class OutOfWindow(ChangePointError):
    pass


class DegenerateWindow(ChangePointError):
    pass


class MissingKappa(ChangePointError):
    pass


class MissingReference(ChangePointError):
    pass


class Diverged(ChangePointError):
    """An iterate left the positive definite cone (or blew past a guard).

    ``tau`` records the change-point candidate being processed when it
    happened, if any.
    """

    def __init__(self, message: str, tau: int | None = None):
        super().__init__(message)
        self.tau = tau


class DataError(ChangePointError):
    """Base for input-data problems (CLI exit code 3)."""


class Malformed(DataError):
    pass


class Empty(DataError):
    pass


class ZeroVariance(DataError):
    pass


class NonPositivePrice(DataError):
    pass


class Io(DataError):
    """The input file could not be read."""
