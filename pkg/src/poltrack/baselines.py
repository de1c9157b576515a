"""Reference polarization trackers the pilot-based scheme is compared
against: a 1-tap constant-modulus butterfly and a data-aided real-valued
MIMO equalizer with frozen payload weights."""

from dataclasses import dataclass

import numpy as np

from .dsp import DemodBand
from .errors import AlignmentError, ConfigurationError
from .jones import JonesMatrix
from .kernels import cma_butterfly, lms_fir_4x2
from .txgen import SymbolFrame


@dataclass
class ButterflyTrack:
    """Per-sample 1-tap butterfly trajectory with a divergence flag."""

    weights: JonesMatrix
    diverged: bool

    def alpha(self) -> np.ndarray:
        """Apparent rotation angle of the butterfly, in [0, pi/2]."""
        return np.arctan2(np.abs(self.weights.m_hv), np.abs(self.weights.m_hh))


def cma_track(
    pt2: DemodBand,
    all_bands: dict | None = None,
    mu: float = 1e-5,
    guard: float = 1e3,
) -> tuple:
    """Blind 1-tap CMA driven by the high pilot band.

    The input pair is normalized to unit RMS, the H output is regressed to
    constant modulus and the V row is kept as the unitary complement, so the
    quantum signal appears on V like with the pilot-based tracker.  The
    reference modulus squared is 2: in normalized units that is the pilot
    power of both polarizations combined, so the equalizer is rewarded for
    steering the whole tone onto H.  The scale-free per-sample weights are
    applied to every band in ``all_bands``; returns
    ``(demuxed_bands, ButterflyTrack)``.
    """
    from .dsp import apply_demux

    if mu <= 0:
        raise ConfigurationError("mu must be positive")
    rms = np.sqrt(np.mean(np.abs(pt2.v) ** 2 + np.abs(pt2.h) ** 2) / 2.0)
    if rms == 0:
        raise ConfigurationError("cannot drive CMA with an all-zero band")
    w, diverged = cma_butterfly(
        np.ascontiguousarray(pt2.v / rms),
        np.ascontiguousarray(pt2.h / rms),
        2.0,
        mu,
        guard,
    )
    # the complement rows share the H-row norm, so one per-sample scale
    # makes the butterfly exactly unitary and keeps the shot-noise level
    # unchanged through the demultiplex
    norm = np.sqrt(np.abs(w[:, 0]) ** 2 + np.abs(w[:, 1]) ** 2)
    norm[norm < 1e-30] = 1.0
    weights = JonesMatrix(
        m_vv=w[:, 2] / norm, m_vh=w[:, 3] / norm, m_hv=w[:, 0] / norm, m_hh=w[:, 1] / norm
    )
    track = ButterflyTrack(weights=weights, diverged=bool(diverged))
    demuxed = {}
    if all_bands:
        demuxed = {name: apply_demux(weights, band) for name, band in all_bands.items()}
    return demuxed, track


@dataclass
class FirResult:
    """Equalized symbol stream of the FIR-only receiver."""

    symbols: np.ndarray
    diverged: bool


def fir_mimo_track(
    v_symbols: np.ndarray,
    h_symbols: np.ndarray,
    frame: SymbolFrame,
    taps: int = 11,
    mu: float = 1e-5,
    guard: float = 1e3,
) -> FirResult:
    """Real-valued 4-input/2-output FIR with LMS on the training block.

    Both polarization symbol streams feed the filter as (I, Q) rails; the
    weights start as a V-path identity, adapt against the known training
    symbols and stay frozen over the payload.  Divergence is reported, not
    raised, so sweeps can record the failure.
    """
    if len(v_symbols) != len(frame) or len(h_symbols) != len(frame):
        raise AlignmentError("symbol streams do not align with the frame")
    if taps < 1 or taps % 2 == 0:
        raise ConfigurationError("taps must be a positive odd count")
    from .dsp import equalizer_average_start

    y_i, y_q, weights, diverged = lms_fir_4x2(
        np.ascontiguousarray(v_symbols.real),
        np.ascontiguousarray(v_symbols.imag),
        np.ascontiguousarray(h_symbols.real),
        np.ascontiguousarray(h_symbols.imag),
        np.ascontiguousarray(frame.symbols.real),
        np.ascontiguousarray(frame.symbols.imag),
        np.ascontiguousarray(frame.train_mask),
        taps,
        mu,
        guard,
        equalizer_average_start(frame.train_mask),
    )
    # unit white-noise gain per output rail: the minimum-mean-square
    # solution shrinks signal and noise together at finite SNR, which would
    # otherwise bias downstream variance estimates
    gain_i = float(np.sqrt(np.sum(weights[0] ** 2)))
    gain_q = float(np.sqrt(np.sum(weights[1] ** 2)))
    if gain_i > 1e-12 and gain_q > 1e-12:
        y_i = y_i / gain_i
        y_q = y_q / gain_q
    return FirResult(symbols=y_i + 1j * y_q, diverged=bool(diverged))
