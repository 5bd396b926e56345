"""Exception types shared across the package."""


class SwayrankError(Exception):
    """Base class for all package errors."""


class EmptyWindow(SwayrankError):
    """A time window contains no samples."""


class SlopeDegenerate(SwayrankError):
    """Abscissa variance too small for a slope fit."""


class DomainError(SwayrankError):
    """A formula was evaluated outside its domain (e.g. log of a non-positive value)."""


class DegenerateData(SwayrankError):
    """Data cannot support the requested fit (single class, too few points, ...)."""


class EmptyLibrary(SwayrankError):
    """A learner library with no members."""


class ArityMismatch(SwayrankError):
    """Feature count does not match what the model was fitted on."""


class ZeroVarianceIC(SwayrankError):
    """Influence-curve standard deviation below the numerical floor."""


class DegenerateSplit(SwayrankError):
    """A leave-one-out split lost one of the two classes entirely."""


class MissingTrajectory(SwayrankError):
    """No trajectory file for a (subject, protocol) pair."""


class DataFormatError(SwayrankError):
    """A data file does not match the expected format."""
