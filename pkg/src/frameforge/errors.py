"""Exception hierarchy."""


class FrameForgeError(Exception):
    """Base class for all library errors."""


class PreconditionError(FrameForgeError, ValueError):
    """Input violates a documented precondition."""


class NoCertificateError(FrameForgeError):
    """The frame carries no tail certificate for the requested operation."""

    def __init__(self, msg: str = "no shrinking certificate"):
        super().__init__(msg)


class WeakCertificateError(FrameForgeError):
    """A tail certificate does not fall below the required threshold in range."""

    def __init__(self, msg: str = "tail certificate too weak", *, k: int | None = None):
        super().__init__(msg)
        self.k = k


class ApproximationError(FrameForgeError):
    """A numerical search did not reach the requested tolerance."""

    def __init__(self, msg: str, best=None):
        super().__init__(msg)
        self.best = best
