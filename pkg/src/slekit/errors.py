"""Exception hierarchy.

Every named failure mode raised by the library lives here. The four
category bases exist so the CLI can map any library failure to a stable
exit code without enumerating leaf classes.
"""


class SlekitError(Exception):
    """Base class for all library errors."""


class InputError(SlekitError):
    """Missing or unreadable external inputs (files, manifests)."""


class DataError(SlekitError):
    """Inputs that were read fine but violate a structural contract."""


class InsufficientDataError(SlekitError):
    """Not enough data to run the requested computation."""


class NumericalError(SlekitError):
    """A numerical procedure left its domain of validity."""


# -- input / IO ------------------------------------------------------------

class MissingFrame(InputError):
    """A frame path referenced by the manifest does not exist."""


# -- mask ingest -----------------------------------------------------------

class DimensionMismatch(DataError):
    """Frames in one sequence disagree on width or height."""


class NonmonotoneTimestamps(DataError):
    """Frame timestamps are not strictly increasing."""


class EmptyMask(DataError):
    """An operation needed at least one occupied pixel and got none."""


class NotConnected(DataError):
    """Boundary tracing was asked to walk a disconnected pixel set."""


class DegenerateCloud(DataError):
    """A principal axis was requested for fewer than two distinct points."""


class NoActivity(InsufficientDataError):
    """A window never contains any occupied pixel."""


class InsufficientActivity(InsufficientDataError):
    """A window has too few active frames to build a driver."""


class NonUnitAxis(DataError):
    """A projection axis must have unit Euclidean norm."""


# -- Loewner core ----------------------------------------------------------

class NonCapacityTime(DataError):
    """A capacity-time driving function was required."""


class NumericalBlowup(NumericalError):
    """The Loewner flow produced non-finite values."""


class TipHit(NumericalError):
    """A point lies strictly inside the removed slit; its image is ambiguous."""


class CurveLeavesHalfPlane(DataError):
    """Curve points must stay in the closed upper half-plane."""


class ZeroStep(DataError):
    """Two consecutive curve points coincide exactly."""


class SelfTouch(NumericalError):
    """The unzipped curve touched the real axis where a slit was expected."""


class InsufficientPoints(InsufficientDataError):
    """A curve operation needs at least three points."""


class NonpositiveFactor(DataError):
    """Spatial rescaling factors must be strictly positive."""


# -- synthesis -------------------------------------------------------------

class NegativeKappa(DataError):
    """kappa must be nonnegative."""


class NonpositiveAlpha(DataError):
    """Tail exponents must be strictly positive."""


# -- diagnostics -----------------------------------------------------------

class TooShort(InsufficientDataError):
    """The series is too short for the requested estimator."""


class DegenerateSample(InsufficientDataError):
    """A sample with zero spread cannot be standardized."""


class EmptySignal(InsufficientDataError):
    """The spectral estimator received an empty signal."""


class SegmentTooLong(InsufficientDataError):
    """Welch segment length exceeds the signal length."""


class InsufficientBins(InsufficientDataError):
    """Fewer than three spectral bins fall inside the fit range."""


class NonpositivePower(NumericalError):
    """Log-log fitting needs strictly positive powers in the fit range."""


class TooFewBins(InsufficientDataError):
    """Variance-growth binning needs at least two usable bins."""


class TooFewPositive(InsufficientDataError):
    """The Hill estimator ran out of strictly positive order statistics."""


class ThresholdTooSmall(InsufficientDataError):
    """Hill order thresholds below 10 are rejected as meaningless."""


class BadScaleRange(DataError):
    """Box-counting scales must be positive, increasing, and span a decade."""


class OutOfRangeDimension(DataError):
    """kappa = 8(D-1) is only applied for D in [1, 2]."""


class EmptyAnalysis(InsufficientDataError):
    """Report assembly received no usable window results."""
