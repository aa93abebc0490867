"""Exception hierarchy shared by all modules.

Every domain error carries a stable ``code`` string (the class name) that the
CLI reports in its JSON error envelope.
"""


class MotifError(Exception):
    """Base class for domain errors."""

    @property
    def code(self):
        return type(self).__name__


class ConfigError(MotifError, ValueError):
    pass


# wire
class FrameError(MotifError):
    """Base for decode failures. ``consumed`` is how many bytes may be dropped."""

    def __init__(self, message, consumed=0):
        super().__init__(message)
        self.consumed = consumed


class IncompleteFrame(FrameError):
    pass


class CorruptFrame(FrameError):
    pass


class CrcMismatch(CorruptFrame):
    pass


class MalformedFrame(CorruptFrame):
    pass


class InvalidFrame(MotifError, ValueError):
    pass


# projection
class InvalidCamera(MotifError, ValueError):
    pass


class NonPositiveDepth(MotifError, ValueError):
    pass


class PixelOutOfBounds(MotifError, ValueError):
    pass


class BehindCamera(MotifError, ValueError):
    pass


class DimensionMismatch(MotifError, ValueError):
    pass


# affordance
class EmptyCloud(MotifError, ValueError):
    pass


class TooFewSlices(MotifError, ValueError):
    pass


class MissingScores(MotifError, ValueError):
    pass


# features
class InsufficientCoverage(MotifError, ValueError):
    pass


class EmptyTrace(MotifError, ValueError):
    pass


class UnlabeledTrace(MotifError, ValueError):
    pass


# lda
class DegenerateClass(MotifError, ValueError):
    pass


class RankCollapse(MotifError, ArithmeticError):
    pass


class TooFewPoints(MotifError, ValueError):
    pass


class DegenerateCovariance(MotifError, ArithmeticError):
    pass


# synth
class InvalidGeometry(MotifError, ValueError):
    pass


# io
class FormatError(MotifError, ValueError):
    pass
