"""Link evaluation: channel-parameter estimation, EVM, tracking error and
the asymptotic Gaussian-modulation key rate."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EstimationError


@dataclass
class ParamEstimate:
    """Data-aided channel parameters in shot-noise units."""

    gain: complex  #: complex symbol gain, |gain|^2 estimates eta*T
    t_hat: float  #: channel transmittance estimate, detector efficiency removed
    xi: float  #: excess noise referred to the channel input, SNU
    sigma2: float  #: total per-quadrature noise variance at the receiver, SNU


@dataclass
class SkrParams:
    """Operating point of the asymptotic key-rate calculation."""

    v_a: float = 6.15
    t: float = 10 ** -0.4971
    xi: float = 0.030
    eta: float = 0.56
    v_ele: float = 0.15
    beta: float = 0.95
    symbol_rate: float = 1e9
    train_ratio: float = 0.20


@dataclass
class MetricsReport:
    """Per-trial scalar results, one row of the sweep CSV."""

    t_hat: float
    xi_hat: float
    evm_db: float
    alpha_rms_err: float
    skr_bps: float
    block_size: int
    sr: float
    tracker: str
    seed: int
    diverged: bool = False


def estimate_params(
    tx_symbols: np.ndarray,
    rx_symbols: np.ndarray,
    v_ele: float = 0.0,
    eta: float = 1.0,
    cal=None,
    subtract_shot: bool = True,
) -> ParamEstimate:
    """Least-squares gain plus residual-variance decomposition.

    ``rx_symbols`` must be in shot-noise units already, or ``cal`` (an
    :class:`~poltrack.channel.SnuCalibration`) is applied first.  The
    residual per-quadrature variance splits into shot noise (1 SNU),
    electronic noise ``v_ele`` and channel-referred excess noise;
    ``subtract_shot=False`` keeps the whole residual as excess noise, the
    correct bookkeeping for noiseless sanity runs.
    """
    if len(tx_symbols) != len(rx_symbols):
        raise EstimationError("symbol streams must have equal length")
    if len(tx_symbols) < 2:
        raise EstimationError("too few symbols for parameter estimation")
    if cal is not None:
        rx_symbols = rx_symbols / np.sqrt(cal.scale)
    denom = np.vdot(tx_symbols, tx_symbols)
    if denom == 0:
        raise EstimationError("transmit reference has zero power")
    g = complex(np.vdot(tx_symbols, rx_symbols) / denom)
    eta_t = abs(g) ** 2
    if eta_t < 1e-6:
        raise EstimationError("channel gain too small to estimate parameters")
    resid = rx_symbols - g * tx_symbols
    sigma2 = float(np.var(resid.real) + np.var(resid.imag)) / 2.0
    excess = sigma2 - (1.0 + v_ele if subtract_shot else 0.0)
    return ParamEstimate(gain=g, t_hat=eta_t / eta, xi=excess / eta_t, sigma2=sigma2)


def evm(rx_symbols: np.ndarray, tx_symbols: np.ndarray, floor_db: float = -120.0) -> float:
    """Error vector magnitude 10*log10(sum|rx - tx|^2 / sum|tx|^2) in dB."""
    if len(tx_symbols) != len(rx_symbols) or len(tx_symbols) == 0:
        raise EstimationError("symbol streams must be non-empty and equal length")
    ref = np.sum(np.abs(tx_symbols) ** 2)
    if ref == 0:
        raise EstimationError("transmit reference has zero power")
    err = np.sum(np.abs(rx_symbols - tx_symbols) ** 2)
    if err == 0:
        return floor_db
    return float(max(10.0 * np.log10(err / ref), floor_db))


def _aligned_rms(est: np.ndarray, true: np.ndarray, period: float) -> float:
    best = np.inf
    for sign in (1.0, -1.0):
        d = sign * est - true
        for step in (2.0 * np.pi, np.pi):
            r = d - step * np.round(np.median(d) / step)
            r = (r + period / 2) % period - period / 2
            best = min(best, float(np.sqrt(np.mean(r**2))))
    return best


def tracking_error_stats(est, truth) -> tuple:
    """RMS angle errors (alpha, dphi) against the realized trajectory.

    The tracker observes the rotation only up to a global sign and constant
    half-turn offsets, so both signs and the best constant-offset multiple
    are tried and the smallest wrapped RMS residual is returned for each
    angle.  ``truth`` must already be decimated to the tracker rate.
    """
    if len(est.alpha) != len(truth.alpha) or len(est.alpha) == 0:
        raise EstimationError("angle streams must be non-empty and equal length")
    alpha_rms = _aligned_rms(np.asarray(est.alpha), np.asarray(truth.alpha), np.pi)
    dphi_true = -(np.asarray(truth.phi1) + np.asarray(truth.phi2))
    dphi_rms = _aligned_rms(np.asarray(est.dphi), dphi_true, 2.0 * np.pi)
    return alpha_rms, dphi_rms


def _g_holevo(x: float) -> float:
    if x <= 1.0:
        return 0.0
    a = (x + 1.0) / 2.0
    b = (x - 1.0) / 2.0
    return a * math.log2(a) - b * math.log2(b)


def _symplectic(a: float, b: float) -> tuple:
    disc = a * a - 4.0 * b
    if disc < 0:
        if disc < -1e-9 * max(a * a, 1.0):
            raise EstimationError("covariance matrix is not physical")
        disc = 0.0
    root = math.sqrt(disc)
    hi = (a + root) / 2.0
    lo = (a - root) / 2.0
    if hi < 1.0 - 1e-9 or lo < -1e-9:
        raise EstimationError("symplectic eigenvalue out of physical range")
    return math.sqrt(max(hi, 1.0)), math.sqrt(max(lo, 0.0))


def asymptotic_skr(params: SkrParams) -> float:
    """Asymptotic secret-key rate in bit/s for a heterodyne Gaussian link.

    Collective-attack Devetak-Winter rate with a Gaussian-equivalent
    modulation of variance ``v_a``, trusted detector efficiency and
    electronic noise, reverse reconciliation at efficiency ``beta``, and the
    training fraction discounted from the symbol rate.  Negative rates clip
    to zero.
    """
    t, xi, eta, v_ele = params.t, params.xi, params.eta, params.v_ele
    if not 0.0 < t <= 1.0 or not 0.0 < eta <= 1.0:
        raise ConfigurationError("transmittance and eta must be in (0, 1]")
    if params.v_a <= 0 or v_ele < 0 or not 0.0 < params.beta <= 1.0:
        raise ConfigurationError("invalid key-rate operating point")
    if not 0.0 <= params.train_ratio < 1.0 or params.symbol_rate <= 0:
        raise ConfigurationError("invalid key-rate operating point")
    v = params.v_a + 1.0
    chi_line = 1.0 / t - 1.0 + xi
    chi_het = (2.0 - eta + 2.0 * v_ele) / eta
    chi_tot = chi_line + chi_het / t
    i_ab = math.log2((v + chi_tot) / (1.0 + chi_tot))
    a_cm = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line) ** 2
    b_cm = (t * (v * chi_line + 1.0)) ** 2
    nu1, nu2 = _symplectic(a_cm, b_cm)
    denom = (t * (v + chi_tot)) ** 2
    sqrt_b = math.sqrt(b_cm)
    a_het = (
        a_cm * chi_het**2
        + b_cm
        + 1.0
        + 2.0 * chi_het * (v * sqrt_b + t * (v + chi_line))
        + 2.0 * t * (v * v - 1.0)
    ) / denom
    b_het = ((v + sqrt_b * chi_het) ** 2) / denom
    nu3, nu4 = _symplectic(a_het, b_het)
    chi_be = _g_holevo(nu1) + _g_holevo(nu2) - _g_holevo(nu3) - _g_holevo(nu4)
    rate = params.beta * i_ab - chi_be
    return max(0.0, params.symbol_rate * (1.0 - params.train_ratio) * rate)
