"""Exception types raised across the pipeline."""


class CrashwatchError(Exception):
    """Base class for all pipeline errors."""


class MalformedHeader(CrashwatchError, ValueError):
    pass


class DuplicateDate(CrashwatchError, ValueError):
    pass


class EmptyFile(CrashwatchError, ValueError):
    pass


class AnchorNotFound(CrashwatchError, KeyError):
    pass


class AllMissingColumn(CrashwatchError, ValueError):
    pass


class NonPositivePrice(CrashwatchError, ValueError):
    pass


class UnknownSourceColumn(CrashwatchError, KeyError):
    pass


class InsufficientData(CrashwatchError, ValueError):
    pass


class AlphaOutOfRange(CrashwatchError, ValueError):
    pass


class DateMismatch(CrashwatchError, ValueError):
    pass


class MinorityTooSmall(CrashwatchError, ValueError):
    pass


class NonFiniteActivation(CrashwatchError, FloatingPointError):
    """Raised when a forward pass produces inf/nan, usually a diverged net."""


class EmptySplit(CrashwatchError, ValueError):
    pass


class ShapeMismatch(CrashwatchError, ValueError):
    pass


class SingleClassTraining(CrashwatchError, ValueError):
    pass


class LengthMismatch(CrashwatchError, ValueError):
    pass


class NoPositives(CrashwatchError, ValueError):
    pass


class RangeOutsideData(CrashwatchError, ValueError):
    pass


class UsageError(CrashwatchError):
    """Bad command-line usage; carries the subcommand help text."""

    def __init__(self, message, help_text=""):
        super().__init__(message)
        self.help_text = help_text
