"""Exception hierarchy shared by all poltrack modules.

Exit-code mapping for the CLI: configuration problems exit with 2,
runtime/numerical problems with 3.
"""


class PolTrackError(Exception):
    """Base class for all poltrack errors."""

    exit_code = 3


class ConfigurationError(PolTrackError):
    """Invalid or inconsistent configuration (bad frequency plan, modes, ...)."""

    exit_code = 2


class CalibrationError(PolTrackError):
    """Shot-noise calibration produced a non-positive or inconsistent scale."""


class EstimationError(PolTrackError):
    """A spectral or statistical estimate could not be formed."""


class SynchronizationError(PolTrackError):
    """Symbol-timing metric was flat; no usable sampling phase."""


class TrackerDropoutError(PolTrackError):
    """Pilot power fell below the noise floor; tracker output undefined."""


class DivergenceError(PolTrackError):
    """An adaptive filter exceeded its divergence guard."""


class AlignmentError(PolTrackError):
    """Sequences that must be sample-aligned have mismatched lengths."""
