"""Exception hierarchy.

Data problems (bad files, bad shapes, too-short signals) derive from
``DataError``; numerical breakdowns (non-finite loss, rank-deficient
kernels) derive from ``NumericalError``. The CLI maps the two families to
distinct exit codes.
"""


class LmfccError(Exception):
    """Base class for all package errors."""


class DataError(LmfccError, ValueError):
    """Input data or file contents violate a documented contract."""


class NumericalError(LmfccError, ArithmeticError):
    """A computation produced or would produce an invalid numerical result."""


class ConfigError(DataError):
    """Invalid MFCC or training configuration."""


# WAV ingestion

class WavError(DataError):
    pass


class MissingFileError(WavError, FileNotFoundError):
    pass


class UnsupportedEncodingError(WavError):
    """Not 16-bit integer PCM."""


class MultiChannelError(WavError):
    pass


class TruncatedHeaderError(WavError):
    pass


# Kernel container

class ContainerError(DataError):
    pass


class BadMagicError(ContainerError):
    pass


class VersionMismatchError(ContainerError):
    pass


class TensorLengthError(ContainerError):
    """Declared dims disagree with the amount of stored data."""


class MissingTensorError(ContainerError):
    pass


class RankDeficientError(NumericalError):
    pass


class NonFiniteLossError(NumericalError):
    def __init__(self, step, value):
        super().__init__(f"non-finite loss {value!r} at step {step}")
        self.step = step
        self.value = value


class NonFiniteKernelError(NumericalError):
    def __init__(self, step, name):
        super().__init__(f"kernel {name!r} became non-finite at step {step}")
        self.step = step
        self.name = name
