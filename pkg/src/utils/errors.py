"""
Exception hierarchy for bandsleep
"""

from typing import Optional


class BandSleepError(Exception):
    """Base class for every error raised by the toolkit"""


class TraceParseError(BandSleepError, ValueError):
    """Malformed trace file row or header"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class TraceValidationError(BandSleepError, ValueError):
    """Trace content breaks a capacity or uniqueness invariant"""


class ConfigMismatchError(BandSleepError, ValueError):
    """Cell configuration is invalid or does not match the data"""


class ContractViolationError(BandSleepError, ValueError):
    """A caller broke an operation's precondition"""


class InsufficientHistoryError(BandSleepError, ValueError):
    """Not enough past band counts to build a window"""


class NumericError(BandSleepError):
    """Non-finite value produced by the network"""


class TrainingDivergedError(BandSleepError):
    """Training loss became non-finite"""

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")


class StageError(BandSleepError):
    """A pipeline stage failed"""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
