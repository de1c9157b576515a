"""Transmit-side synthesis: discrete-Gaussian 256QAM plus two CW pilot tones.

The quantum signal and pilot tone 1 are placed on the vertical polarization,
pilot tone 2 on the horizontal one.  All waveforms are complex envelopes in
the local-oscillator rotating frame, i.e. a component generated at frequency
``f`` beats to a real detected tone at exactly ``f`` after heterodyne
detection.  Quadrature values are expressed in shot-noise units (SNU); the
``amplitude`` argument of :func:`synthesize_tx` carries the arbitrary-unit
scale per root-SNU fixed by the receiver calibration.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import upfirdn

from .errors import ConfigurationError
from .pulses import rrc_taps

#: 16 per-axis amplitude levels of the 256QAM grid, before scaling.
QAM_LEVELS = np.arange(-15, 16, 2, dtype=float)

#: The unscaled per-axis target variance of the discrete-Gaussian shaping.
#: The 16-level grid then spans +-3.2 standard deviations, close enough to a
#: true Gaussian for the purposes of this simulation.
DG_TARGET_VAR = (15.0 / 3.2) ** 2


@dataclass(frozen=True)
class TxConfig:
    """Frequency plan and modulation parameters of the transmitter."""

    symbol_rate: float = 1e9
    sample_rate: float = 10e9
    f_q: float = 0.9e9  #: quantum band center at detection baseband
    f_pt1: float = 0.05e9
    f_pt2: float = 1.75e9
    v_a: float = 6.15  #: modulation variance per quadrature, SNU
    pilot_to_signal_db: float = 20.0
    rrc_rolloff: float = 0.3
    rrc_span: int = 64
    n_symbols: int = 100_000
    train_ratio: float = 0.20
    seed: int = 0
    band_guard: float = 0.05e9  #: gap kept between quantum band and pilot bands
    dc_guard: float = 0.01e9  #: lowest frequency retained in the PT1 band

    def __post_init__(self):
        self.validate()

    @property
    def sps(self) -> int:
        return int(round(self.sample_rate / self.symbol_rate))

    @property
    def q_halfwidth(self) -> float:
        return (1.0 + self.rrc_rolloff) * self.symbol_rate / 2.0

    def validate(self) -> None:
        if self.symbol_rate <= 0 or self.sample_rate <= 0:
            raise ConfigurationError("rates must be positive")
        if abs(self.sample_rate / self.symbol_rate - self.sps) > 1e-9:
            raise ConfigurationError("sample_rate must be an integer multiple of symbol_rate")
        if not 0.0 <= self.train_ratio < 1.0:
            raise ConfigurationError("train_ratio must be in [0, 1)")
        if self.v_a <= 0:
            raise ConfigurationError("v_a must be positive")
        if self.n_symbols < 1:
            raise ConfigurationError("n_symbols must be >= 1")
        nyq = self.sample_rate / 2.0
        if not self.f_pt1 < self.f_q - self.q_halfwidth:
            raise ConfigurationError("PT1 must sit below the quantum band")
        if not self.f_q + self.q_halfwidth < self.f_pt2:
            raise ConfigurationError("PT2 must sit above the quantum band")
        if not (0.0 < self.f_pt1 and self.f_pt2 < nyq and self.f_q + self.q_halfwidth < nyq):
            raise ConfigurationError("all bands must lie inside (0, sample_rate/2)")

    def band_intervals(self) -> dict:
        """Disjoint (f_lo, f_hi) analysis intervals for the three bands.

        The quantum interval is the exact RRC support; pilot intervals fill
        the remaining gaps shrunk by the guard, PT2's capped symmetrically
        around its tone.
        """
        q_lo = self.f_q - self.q_halfwidth
        q_hi = self.f_q + self.q_halfwidth
        pt1 = (self.dc_guard, q_lo - self.band_guard)
        pt2_lo = q_hi + self.band_guard
        pt2_hi = min(2 * self.f_pt2 - pt2_lo, self.sample_rate / 2 - self.dc_guard)
        if not (pt1[0] < self.f_pt1 < pt1[1] and pt2_lo < self.f_pt2 < pt2_hi):
            raise ConfigurationError("pilot tones fall outside their analysis bands")
        return {"q": (q_lo, q_hi), "pt1": pt1, "pt2": (pt2_lo, pt2_hi)}


@dataclass
class SymbolFrame:
    """Quantum symbols with their training mask, in shot-noise units."""

    symbols: np.ndarray  #: complex, per-quadrature variance v_a
    train_mask: np.ndarray  #: bool, same length
    v_a: float

    def __post_init__(self):
        if len(self.symbols) != len(self.train_mask):
            raise ConfigurationError("symbols and train_mask length mismatch")

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass
class DualPolSeries:
    """Paired complex sample streams for the two polarizations."""

    v: np.ndarray
    h: np.ndarray
    sample_rate: float

    def __post_init__(self):
        if len(self.v) != len(self.h):
            raise ConfigurationError("polarization streams must have equal length")

    def __len__(self) -> int:
        return len(self.v)

    def power(self) -> float:
        return float(np.mean(np.abs(self.v) ** 2 + np.abs(self.h) ** 2))


@lru_cache(maxsize=8)
def dg256_distribution(nu: float):
    """Per-axis levels and probabilities of the discrete-Gaussian shaping.

    Probabilities are proportional to ``exp(-nu * x**2)`` on the unscaled
    level grid; the two axes are independent so the 256-point constellation
    factorises.
    """
    w = np.exp(-nu * QAM_LEVELS**2)
    p = w / w.sum()
    return QAM_LEVELS.copy(), p


def solve_dg_nu(target_var: float = DG_TARGET_VAR) -> float:
    """Bisect for the shaping parameter giving the unscaled target variance."""
    levels = QAM_LEVELS

    def var_of(nu: float) -> float:
        _, p = dg256_distribution(nu)
        return float(np.sum(p * levels**2))

    lo, hi = 0.0, 1.0
    if not var_of(hi) < target_var < var_of(lo):
        raise ConfigurationError(
            f"discrete-Gaussian target variance {target_var} not bracketable"
        )
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if var_of(mid) > target_var:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=1)
def _default_nu() -> float:
    return solve_dg_nu()


def sample_dg256qam(n: int, v_a: float, seed: int, nu: float | None = None) -> SymbolFrame:
    """Draw i.i.d. DG-256QAM symbols with per-quadrature variance ``v_a``.

    ``nu`` overrides the shaping parameter (0 gives the uniform 256QAM
    limit); by default it is solved so the grid spans +-3.2 sigma and the
    gain then sets the variance to ``v_a`` exactly in expectation.
    """
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    if v_a <= 0:
        raise ConfigurationError("v_a must be positive")
    if nu is None:
        nu = _default_nu()
    levels, p = dg256_distribution(nu)
    var_unscaled = float(np.sum(p * levels**2))
    gain = np.sqrt(v_a / var_unscaled)
    rng = np.random.default_rng(seed)
    i = rng.choice(levels, size=n, p=p)
    q = rng.choice(levels, size=n, p=p)
    symbols = gain * (i + 1j * q)
    return SymbolFrame(symbols=symbols, train_mask=np.zeros(n, dtype=bool), v_a=v_a)


def build_frame(cfg: TxConfig) -> SymbolFrame:
    """Symbols plus a block training mask: first ceil(ratio*n) symbols train."""
    frame = sample_dg256qam(cfg.n_symbols, cfg.v_a, cfg.seed)
    n_train = int(np.ceil(cfg.train_ratio * cfg.n_symbols))
    frame.train_mask[:n_train] = True
    return frame


def shaped_baseband(symbols: np.ndarray, cfg: TxConfig) -> np.ndarray:
    """RRC-shape symbols to the sample rate, peak of pulse k at sample k*sps."""
    taps = rrc_taps(cfg.sps, cfg.rrc_span, cfg.rrc_rolloff)
    x = upfirdn(taps, symbols, up=cfg.sps)
    delay = (len(taps) - 1) // 2
    out = np.zeros(len(symbols) * cfg.sps, dtype=complex)
    avail = min(len(out), len(x) - delay)
    out[:avail] = x[delay : delay + avail]
    return out


def pilot_amplitude(cfg: TxConfig) -> float:
    """CW tone amplitude for the configured pilot-to-signal power ratio.

    The mean quantum envelope power per sample is ``2 v_a * sum(h^2)/sps``
    which is ``2 v_a / sps`` for the unit-energy pulse.
    """
    p_quantum = 2.0 * cfg.v_a / cfg.sps
    return np.sqrt(10 ** (cfg.pilot_to_signal_db / 10.0) * p_quantum)


def synthesize_tx(frame: SymbolFrame, cfg: TxConfig, amplitude: float = 1.0) -> DualPolSeries:
    """Dual-polarization transmit envelope for one frame.

    V carries the RRC-shaped quantum signal at ``f_q`` plus the PT1 tone,
    H carries the PT2 tone with the same amplitude as PT1.  ``amplitude``
    scales the whole frame (arbitrary units per root-SNU).
    """
    if len(frame) != cfg.n_symbols:
        raise ConfigurationError("frame length does not match cfg.n_symbols")
    cfg.band_intervals()  # raises if the frequency plan is inconsistent
    n = cfg.n_symbols * cfg.sps
    t = np.arange(n) / cfg.sample_rate
    a_p = pilot_amplitude(cfg)
    v = shaped_baseband(frame.symbols, cfg) * np.exp(2j * np.pi * cfg.f_q * t)
    v += a_p * np.exp(2j * np.pi * cfg.f_pt1 * t)
    h = a_p * np.exp(2j * np.pi * cfg.f_pt2 * t)
    return DualPolSeries(v=amplitude * v, h=amplitude * h, sample_rate=cfg.sample_rate)
