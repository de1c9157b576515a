"""Desk-scale simulator and DSP library for a heterodyne CV-QKD link with
pilot-tone-based fast polarization tracking.

The package covers the full chain: discrete-Gaussian 256QAM transmitter
with two CW pilot tones, a time-varying unitary fiber channel with
configurable scrambling, polarization-diversity heterodyne detection, the
pilot-based polarization tracker with baseline alternatives, and excess
noise plus secret-key-rate evaluation.
"""

from .channel import ChannelConfig, JonesTrajectory, SnuCalibration
from .errors import (
    AlignmentError,
    CalibrationError,
    ConfigurationError,
    DivergenceError,
    EstimationError,
    PolTrackError,
    SynchronizationError,
    TrackerDropoutError,
)
from .frontend import FrontendConfig, RealSeriesPair
from .jones import JonesMatrix
from .metrics import MetricsReport, ParamEstimate, SkrParams
from .pipeline import ExperimentConfig, run_experiment, run_trial
from .txgen import DualPolSeries, SymbolFrame, TxConfig

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "CalibrationError",
    "ChannelConfig",
    "ConfigurationError",
    "DivergenceError",
    "DualPolSeries",
    "EstimationError",
    "ExperimentConfig",
    "FrontendConfig",
    "JonesMatrix",
    "JonesTrajectory",
    "MetricsReport",
    "ParamEstimate",
    "PolTrackError",
    "RealSeriesPair",
    "SkrParams",
    "SnuCalibration",
    "SymbolFrame",
    "SynchronizationError",
    "TrackerDropoutError",
    "TxConfig",
    "run_experiment",
    "run_trial",
    "__version__",
]
