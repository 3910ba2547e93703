"""Exception hierarchy shared by all modules."""


class HilbertError(Exception):
    """Base class for every error raised by this package."""


class PointNotInterior(HilbertError, ValueError):
    pass


class DimensionMismatch(HilbertError, ValueError):
    pass


class NonpositiveFactor(HilbertError, ValueError):
    pass


class DegenerateBody(HilbertError, ValueError):
    pass


class DegenerateInput(HilbertError, ValueError):
    pass


class WidthOutOfRange(HilbertError, ValueError):
    pass


class CertificateError(HilbertError, ValueError):
    """The sandwich radii supplied for a body do not hold."""


class CoincidentPoints(HilbertError, ValueError):
    pass


class PickerPointNotInFace(HilbertError, ValueError):
    pass


class BudgetTooSmall(HilbertError, ValueError):
    pass


class InvalidSpec(HilbertError, ValueError):
    pass


class NonPolytopeBody(HilbertError, TypeError):
    pass


class EpsilonTooSmall(HilbertError, ValueError):
    pass


class NonConvergentFit(HilbertError, RuntimeError):
    """Raised when a tail fit is too noisy to report a number."""


class BadConfig(HilbertError, ValueError):
    pass


class UnknownCommand(BadConfig):
    pass
