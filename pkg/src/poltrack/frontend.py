"""Polarization-diversity heterodyne detection and ADC capture.

The complex envelopes handed to the frontend live in the local-oscillator
rotating frame, so detection is ``Re{E(t) exp(j theta_lo(t))}`` plus
detection noise: each spectral component generated at envelope frequency
``f`` lands on the real IF signal at ``f`` directly.  Both polarization arms
share identical delay and gain.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from .channel import wiener_phase
from .errors import ConfigurationError
from .txgen import DualPolSeries


@dataclass(frozen=True)
class FrontendConfig:
    """Receiver frontend parameters."""

    lo_offset: float = 1.75e9
    lo_linewidth: float = 100.0
    bpd_bandwidth: float | None = 1.6e9  #: single-pole 3-dB point, None = off
    shot_psd: float = 1.0  #: per-sample detection-noise variance (arb. units)
    adc_rate: float = 10e9
    adc_bits: int | None = None

    def __post_init__(self):
        if self.shot_psd < 0:
            raise ConfigurationError("shot_psd must be >= 0")
        if self.adc_bits is not None and self.adc_bits < 1:
            raise ConfigurationError("adc_bits must be >= 1")


@dataclass
class RealSeriesPair:
    """Two real detected IF streams at a common sample rate."""

    i_v: np.ndarray
    i_h: np.ndarray
    sample_rate: float

    def __post_init__(self):
        if len(self.i_v) != len(self.i_h):
            raise ConfigurationError("detected streams must have equal length")

    def __len__(self) -> int:
        return len(self.i_v)


def bpd_response(freqs: np.ndarray, bandwidth: float) -> np.ndarray:
    """Single-pole lowpass response with its 3-dB point at ``bandwidth``."""
    return 1.0 / (1.0 + 1j * np.asarray(freqs) / bandwidth)


def _apply_bpd(x: np.ndarray, sample_rate: float, bandwidth: float) -> np.ndarray:
    spec = np.fft.rfft(x)
    f = np.fft.rfftfreq(len(x), d=1.0 / sample_rate)
    return np.fft.irfft(spec * bpd_response(f, bandwidth), n=len(x))


def heterodyne_detect(
    rx: DualPolSeries,
    cfg: FrontendConfig,
    eta: float = 1.0,
    shot_psd: float | None = None,
    ele_psd: float = 0.0,
    rng: np.random.Generator | None = None,
) -> RealSeriesPair:
    """Beat both polarizations against the LO and add detection noise.

    ``eta`` is the detector quantum efficiency (amplitude factor sqrt(eta)
    on the field).  Shot and electronic noise are white Gaussian per real
    sample and pass the optional BPD filter together with the signal.
    """
    if len(rx) == 0:
        raise ConfigurationError("rx frame is empty")
    if rng is None:
        rng = np.random.default_rng(0)
    if shot_psd is None:
        shot_psd = cfg.shot_psd
    n = len(rx)
    if cfg.lo_linewidth > 0:
        lo = np.exp(1j * wiener_phase(rng, n, cfg.lo_linewidth, rx.sample_rate))
    else:
        lo = 1.0
    root_eta = np.sqrt(eta)
    i_v = np.real(rx.v * lo) * root_eta
    i_h = np.real(rx.h * lo) * root_eta
    noise_var = shot_psd + ele_psd
    if noise_var > 0:
        sigma = np.sqrt(noise_var)
        i_v = i_v + sigma * rng.standard_normal(n)
        i_h = i_h + sigma * rng.standard_normal(n)
    if cfg.bpd_bandwidth is not None:
        i_v = _apply_bpd(i_v, rx.sample_rate, cfg.bpd_bandwidth)
        i_h = _apply_bpd(i_h, rx.sample_rate, cfg.bpd_bandwidth)
    return RealSeriesPair(i_v=i_v, i_h=i_h, sample_rate=rx.sample_rate)


def adc_capture(pair: RealSeriesPair, cfg: FrontendConfig) -> RealSeriesPair:
    """Decimate to the ADC rate and optionally quantize uniformly."""
    ratio = pair.sample_rate / cfg.adc_rate
    if abs(ratio - round(ratio)) > 1e-9:
        raise ConfigurationError("adc_rate must divide the input sample rate")
    step = int(round(ratio))
    i_v = pair.i_v[::step]
    i_h = pair.i_h[::step]
    if cfg.adc_bits is not None:
        full = max(np.max(np.abs(i_v)), np.max(np.abs(i_h)), 1e-30)
        q = full / (2 ** (cfg.adc_bits - 1))
        i_v = np.clip(np.round(i_v / q), -(2 ** (cfg.adc_bits - 1)), 2 ** (cfg.adc_bits - 1) - 1) * q
        i_h = np.clip(np.round(i_h / q), -(2 ** (cfg.adc_bits - 1)), 2 ** (cfg.adc_bits - 1) - 1) * q
    return RealSeriesPair(i_v=i_v, i_h=i_h, sample_rate=cfg.adc_rate)


def dump_waveform(pair: RealSeriesPair, path: str, seed: int, config_repr: str) -> None:
    """Write interleaved little-endian float32 (i_v, i_h) plus a text sidecar."""
    data = np.empty(2 * len(pair), dtype="<f4")
    data[0::2] = pair.i_v
    data[1::2] = pair.i_h
    data.tofile(path)
    digest = hashlib.sha256(config_repr.encode()).hexdigest()[:16]
    with open(path + ".txt", "w", encoding="ascii") as fh:
        fh.write(f"sample_rate={pair.sample_rate!r}\n")
        fh.write(f"length={len(pair)}\n")
        fh.write(f"seed={seed}\n")
        fh.write(f"config_hash={digest}\n")


def load_waveform(path: str) -> RealSeriesPair:
    """Read a waveform written by :func:`dump_waveform`."""
    meta = {}
    with open(path + ".txt", "r", encoding="ascii") as fh:
        for line in fh:
            key, _, value = line.strip().partition("=")
            meta[key] = value
    data = np.fromfile(path, dtype="<f4")
    return RealSeriesPair(
        i_v=data[0::2].astype(float),
        i_h=data[1::2].astype(float),
        sample_rate=float(meta["sample_rate"]),
    )
