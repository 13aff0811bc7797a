"""Exception hierarchy.

Every error raised on purpose by the package derives from
:class:`ThermovitalError`; the CLI maps :class:`ConfigError` to exit code 2
and :class:`DataError` to exit code 3.
"""


class ThermovitalError(Exception):
    """Base class for all package errors."""


class ConfigError(ThermovitalError, ValueError):
    """Invalid user-supplied parameters (bad spec, bad ROI, bad band)."""


class DataError(ThermovitalError, ValueError):
    """Input data that cannot be processed as given."""


# ingest
class ThsqFormatError(DataError):
    """File is not a THSQ container (bad magic or unsupported version)."""


class ThsqCorruptionError(DataError):
    """Header and payload disagree, e.g. a truncated frame payload."""


class ThsqHeaderError(DataError):
    """Header fields are structurally invalid (zero width, zero fps...)."""


class SpecError(ConfigError):
    """A synthetic sequence specification violates its invariants."""


# tracker
class TrackerInitError(ConfigError):
    """ROI too small to train a filter on."""


class BoundsError(ConfigError):
    """ROI lies (partly) outside the frame."""


class InputError(DataError):
    """Empty or inconsistent inputs (no frames, mismatched shapes...)."""


# dsp / estimator
class LengthError(DataError):
    """Series too short for the requested operation."""


class BandError(ConfigError):
    """Frequency band is invalid or violates the Nyquist limit."""


class BandResolutionError(DataError):
    """No spectrum bin falls inside the requested band."""


class NotReadyError(DataError):
    """Estimation requested before the buffer holds a full window."""
