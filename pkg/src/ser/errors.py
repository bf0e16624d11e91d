"""Exception hierarchy.

Every domain failure raised by the package derives from :class:`SerError`, so
callers (the CLI in particular) can separate domain errors from bugs. Classes
that signal a violated argument precondition also derive from ``ValueError``.
"""


class SerError(Exception):
    """Base class for all domain errors."""


# audio_io
class UnsupportedFormat(SerError, ValueError):
    pass


class CorruptHeader(SerError, ValueError):
    pass


class EmptySignal(SerError, ValueError):
    pass


# dsp_core
class SignalTooShort(SerError, ValueError):
    pass


class FrameTooShort(SerError, ValueError):
    pass


class BadNfft(SerError, ValueError):
    pass


class LagOutOfRange(SerError, ValueError):
    pass


# features
class EmptyFrame(SerError, ValueError):
    pass


class EmptyTrack(SerError, ValueError):
    pass


class BadPitchBand(SerError, ValueError):
    pass


class BadBand(SerError, ValueError):
    pass


class DimensionMismatch(SerError, ValueError):
    pass


class DegenerateFrame(SerError, ValueError):
    pass


class NumericalBreakdown(SerError, ArithmeticError):
    pass


class NoAnalyzableFrames(SerError, ValueError):
    pass


# svm_core
class SingleClassInput(SerError, ValueError):
    pass


class NonFiniteFeature(SerError, ValueError):
    pass


class IterationLimitExceeded(SerError, RuntimeError):
    """Solver stopped before reaching the KKT tolerance.

    ``diagnostics`` holds the best-so-far state (iterations, gap, alphas).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# classifier
class EmptyTrainingSet(SerError, ValueError):
    pass


class MixedDimensions(SerError, ValueError):
    pass


class MissingClass(SerError, ValueError):
    def __init__(self, label):
        super().__init__(f"no training samples for class {label}")
        self.label = label


class MissingClassInGender(SerError, ValueError):
    def __init__(self, gender, label):
        super().__init__(f"gender {gender} has fewer than 2 samples of {label}")
        self.gender = gender
        self.label = label


class MissingGender(SerError, ValueError):
    pass


class WrongStrategy(SerError, ValueError):
    pass


class UnknownGenderBank(SerError, KeyError):
    pass


class BinaryTrainingError(SerError):
    """An svm_core failure tagged with the one-vs-rest class that triggered it."""

    def __init__(self, label, cause):
        super().__init__(f"training binary model for {label} failed: {cause}")
        self.label = label
        self.cause = cause


class ModelFormatError(SerError):
    pass


class BadMagic(ModelFormatError):
    pass


class VersionUnsupported(ModelFormatError):
    pass


class ChecksumMismatch(ModelFormatError):
    pass


class TruncatedModel(ModelFormatError):
    pass


# dataset
class UnparseableName(SerError, ValueError):
    pass


class UnknownEmotionToken(SerError, ValueError):
    def __init__(self, tokens):
        tokens = list(tokens)
        super().__init__(f"no known emotion token among {tokens}")
        self.tokens = tokens


class BadHeader(SerError, ValueError):
    pass


class RowError(SerError, ValueError):
    """All rejected manifest rows, reported together as (line, reason) pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        lines = "; ".join(f"line {n}: {why}" for n, why in self.problems)
        super().__init__(f"{len(self.problems)} bad manifest row(s): {lines}")


class DuplicatePath(SerError, ValueError):
    pass


class EmptyStratum(SerError, ValueError):
    pass


# report
class MissingGenderForGd(SerError, ValueError):
    pass


class MissingGroup(SerError, ValueError):
    pass
