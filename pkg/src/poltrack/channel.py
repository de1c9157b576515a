"""Time-varying unitary fiber channel: SOP rotation, loss, laser phase
noise and calibrated excess-noise injection.

Three scrambling modes are supported.  ``static`` freezes the channel at its
initial angles.  ``rate`` is the planar rotation used by the high-speed
simulations, a real rotation matrix spinning at ``sr`` rad/s.  ``walk``
moves all three channel angles at a constant total angular speed ``sr``
along a slowly wandering random direction, which reproduces the ballistic
motion of a mechanical scrambler; per-sample angular increments have RMS
quadrature sum exactly ``sr / sample_rate``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, ConfigurationError
from .jones import JonesMatrix
from .txgen import DualPolSeries, TxConfig, shaped_baseband

_MODES = ("static", "rate", "walk")


@dataclass(frozen=True)
class ChannelConfig:
    """Scrambler mode, link loss, noise levels and laser impairments."""

    mode: str = "static"
    alpha0: float = 0.0
    phi1_0: float = 0.0
    phi2_0: float = 0.0
    sr: float = 0.0  #: scrambling rate, rad/s (Jones-space angular rate)
    loss_db: float = 4.971
    eta: float = 0.56
    v_ele: float = 0.15  #: electronic noise, SNU
    xi_ch: float = 0.030  #: injected channel excess noise, SNU
    linewidth_tx: float = 100.0
    linewidth_lo: float = 100.0
    lo_offset: float = 1.75e9
    seed: int = 0
    walk_dir_tau: float = 50e-6  #: correlation time of the walk direction

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ConfigurationError(f"unknown channel mode {self.mode!r}")
        if not 0.0 < self.eta <= 1.0:
            raise ConfigurationError("eta must be in (0, 1]")
        if self.loss_db < 0 or self.xi_ch < 0 or self.sr < 0:
            raise ConfigurationError("loss_db, xi_ch and sr must be non-negative")

    @property
    def transmittance(self) -> float:
        return 10 ** (-self.loss_db / 10.0)


@dataclass
class JonesTrajectory:
    """Realized channel angles on the simulation sample grid."""

    alpha: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    sample_rate: float

    def decimate(self, factor: int) -> "JonesTrajectory":
        return JonesTrajectory(
            alpha=self.alpha[::factor],
            phi1=self.phi1[::factor],
            phi2=self.phi2[::factor],
            sample_rate=self.sample_rate / factor,
        )


@dataclass
class SnuCalibration:
    """Measured shot-noise-unit scale of the receiver chain."""

    shot_plus_ele_var: float
    ele_var: float

    @property
    def scale(self) -> float:
        s = self.shot_plus_ele_var - self.ele_var
        if s <= 0:
            raise CalibrationError("calibration scale is non-positive")
        return s


def _walk_direction(rng: np.random.Generator, n: int, fs: float, tau: float) -> np.ndarray:
    """Slowly wandering unit 3-vector per sample, knot-interpolated."""
    n_knots = max(int(np.ceil(n / fs / tau)) + 2, 2)
    knots = rng.standard_normal((n_knots, 3))
    x = np.linspace(0.0, n_knots - 1.0, n)
    i0 = np.minimum(x.astype(int), n_knots - 2)
    frac = (x - i0)[:, None]
    u = knots[i0] * (1 - frac) + knots[i0 + 1] * frac
    norm = np.linalg.norm(u, axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    return u / norm


def make_trajectory(cfg: ChannelConfig, n: int, sample_rate: float) -> JonesTrajectory:
    """Channel angles for ``n`` samples starting at t=0."""
    if cfg.mode == "static":
        ones = np.ones(n)
        return JonesTrajectory(cfg.alpha0 * ones, cfg.phi1_0 * ones, cfg.phi2_0 * ones, sample_rate)
    if cfg.mode == "rate":
        t = np.arange(n) / sample_rate
        # alpha = -sr*t turns Eq-style angles into the planar rotation
        # [[cos wt, sin wt], [-sin wt, cos wt]].
        zeros = np.zeros(n)
        return JonesTrajectory(cfg.alpha0 - cfg.sr * t, zeros + cfg.phi1_0, zeros + cfg.phi2_0, sample_rate)
    # walk
    rng = np.random.default_rng(cfg.seed)
    u = _walk_direction(rng, n, sample_rate, cfg.walk_dir_tau)
    step = cfg.sr / sample_rate
    inc = step * u
    angles = np.cumsum(inc, axis=0)
    angles += np.array([cfg.alpha0, cfg.phi1_0, cfg.phi2_0]) - inc[0]
    return JonesTrajectory(angles[:, 0], angles[:, 1], angles[:, 2], sample_rate)


def jones_at(t, cfg: ChannelConfig, trajectory_state: JonesTrajectory | None = None) -> JonesMatrix:
    """Channel Jones matrix at time(s) ``t`` seconds.

    Static and rate modes are closed-form; walk mode needs the realized
    ``trajectory_state`` from :func:`make_trajectory` and samples it at the
    nearest grid point.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ConfigurationError("t must be >= 0")
    if cfg.mode == "static":
        return JonesMatrix.from_angles(cfg.alpha0, cfg.phi1_0, cfg.phi2_0)
    if cfg.mode == "rate":
        return JonesMatrix.from_angles(cfg.alpha0 - cfg.sr * t, cfg.phi1_0, cfg.phi2_0)
    if trajectory_state is None:
        raise ConfigurationError("walk mode requires a realized trajectory")
    idx = np.clip(np.round(t * trajectory_state.sample_rate).astype(int), 0, len(trajectory_state.alpha) - 1)
    return JonesMatrix.from_angles(
        trajectory_state.alpha[idx], trajectory_state.phi1[idx], trajectory_state.phi2[idx]
    )


def wiener_phase(rng: np.random.Generator, n: int, linewidth: float, sample_rate: float) -> np.ndarray:
    """Laser phase noise with Var[theta(t)] = 2*pi*linewidth*t."""
    if linewidth <= 0:
        return np.zeros(n)
    sigma = np.sqrt(2.0 * np.pi * linewidth / sample_rate)
    theta = np.cumsum(rng.standard_normal(n)) * sigma
    theta -= theta[0]
    return theta


def apply_channel(
    tx: DualPolSeries,
    cfg: ChannelConfig,
    plan: TxConfig | None = None,
    amplitude: float = 1.0,
    trajectory: JonesTrajectory | None = None,
) -> tuple[DualPolSeries, JonesTrajectory]:
    """Propagate a transmit frame through the time-varying channel.

    Output is ``sqrt(T) * J(t) * (x + xi) * exp(j*theta_tx)``.  Channel
    excess noise ``xi_ch`` is injected at the channel input on the vertical
    polarization, pulse-shaped onto the quantum band so its demodulated
    per-quadrature contribution at the channel output is ``T * xi_ch`` SNU;
    this requires the transmit ``plan`` and the SNU ``amplitude`` used at
    synthesis.
    """
    if len(tx) == 0:
        raise ConfigurationError("tx frame is empty")
    n = len(tx)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xC4A2]))
    v = tx.v
    h = tx.h
    if cfg.xi_ch > 0:
        if plan is None:
            raise ConfigurationError("xi_ch injection requires the transmit plan")
        n_sym = n // plan.sps
        w = rng.standard_normal(n_sym) + 1j * rng.standard_normal(n_sym)
        w *= np.sqrt(cfg.xi_ch)
        t = np.arange(n_sym * plan.sps) / plan.sample_rate
        xi = amplitude * shaped_baseband(w, plan) * np.exp(2j * np.pi * plan.f_q * t)
        v = v + np.pad(xi, (0, n - len(xi)))
    if trajectory is None:
        trajectory = make_trajectory(cfg, n, tx.sample_rate)
    jm = JonesMatrix.from_angles(trajectory.alpha, trajectory.phi1, trajectory.phi2)
    out_v, out_h = jm.apply(v, h)
    gain = np.sqrt(cfg.transmittance)
    if cfg.linewidth_tx > 0:
        phase = np.exp(1j * wiener_phase(rng, n, cfg.linewidth_tx, tx.sample_rate))
        out_v *= gain * phase
        out_h *= gain * phase
    else:
        out_v *= gain
        out_h *= gain
    return DualPolSeries(v=out_v, h=out_h, sample_rate=tx.sample_rate), trajectory


def calibrate_snu(
    cfg: ChannelConfig,
    frontend_cfg,
    plan: TxConfig,
    n_symbols: int = 100_000,
    seed: int = 1,
) -> SnuCalibration:
    """Measure the arbitrary-units-per-SNU scale of the receiver chain.

    Runs a signal-off frame through detection and quantum-band demodulation
    twice, once with shot plus electronic noise and once with electronic
    noise only, and returns the per-quadrature variances.
    """
    from . import dsp, frontend

    dark = DualPolSeries(
        v=np.zeros(n_symbols * plan.sps, dtype=complex),
        h=np.zeros(n_symbols * plan.sps, dtype=complex),
        sample_rate=plan.sample_rate,
    )
    ele_psd = cfg.v_ele * frontend_cfg.shot_psd

    def run(shot: float, ele: float, sub: int) -> float:
        pair = frontend.heterodyne_detect(
            dark, frontend_cfg, eta=cfg.eta, shot_psd=shot, ele_psd=ele,
            rng=np.random.default_rng(np.random.SeedSequence([seed, sub])),
        )
        pair = frontend.adc_capture(pair, frontend_cfg)
        syms = dsp.quantum_noise_symbols(pair, plan, frontend_cfg)
        return float(np.var(syms.real) + np.var(syms.imag)) / 2.0

    both = run(frontend_cfg.shot_psd, ele_psd, 0)
    ele_only = run(0.0, ele_psd, 1)
    cal = SnuCalibration(shot_plus_ele_var=both, ele_var=ele_only)
    cal.scale  # raises CalibrationError when non-positive
    return cal
