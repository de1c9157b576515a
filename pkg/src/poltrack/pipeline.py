"""End-to-end trial orchestration: one seeded frame through transmitter,
channel, frontend and a selected receiver chain, reduced to a metrics row.

Shot-noise-unit bookkeeping: the receiver chain's white-noise transfer is
computed in closed form (:func:`poltrack.dsp.shot_symbol_variance`) and the
noiseless loopback symbol gain is measured once on a small frame
(:func:`poltrack.dsp.loopback_symbol_gain`).  The transmit amplitude is set
so one SNU of modulation arrives as one calibrated unit at the symbol
estimator, which keeps the excess-noise estimate free of calibration bias.
"""

import hashlib
import math
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from types import SimpleNamespace

import numpy as np

from . import baselines, dsp, frontend, metrics, txgen
from .channel import ChannelConfig, apply_channel
from .errors import ConfigurationError, DivergenceError, PolTrackError
from .frontend import FrontendConfig
from .txgen import TxConfig

TRACKERS = ("proposed", "cma", "fir")

#: step size for the residual-ISI equalizer ahead of parameter estimation.
#: Smaller than the adaptive-tracking default: the input is already gain
#: normalized so the weights start at the solution, and a small step keeps
#: the gradient-noise excess well under the excess-noise resolution.
EQ_MU = 1e-6

#: scrambling rates of the low-speed sweep, rad/s
SWEEP_SR_KRAD = (0.0, 0.63e3, 1.26e3, 3.14e3, 6.28e3, 12.57e3)

#: scrambling rates of the high-speed sweep, rad/s
SWEEP_SR_MRAD = (
    0.0,
    2.0 * math.pi * 1e6,
    2.0 * math.pi * 5e6,
    2.0 * math.pi * 10e6,
    2.0 * math.pi * 20e6,
    2.0 * math.pi * 30e6,
    439.82e6,
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one sweep needs: subsystem configs plus orchestration."""

    tx: TxConfig = field(default_factory=TxConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    frontend: FrontendConfig = field(default_factory=FrontendConfig)
    tracker: str = "proposed"
    tracker_window: int = 64
    phase_window: int = 64
    sweep_sr: tuple = SWEEP_SR_KRAD
    trials_per_point: int = 20
    out_dir: str = "out"
    master_seed: int = 0

    def __post_init__(self):
        if self.tracker not in TRACKERS:
            raise ConfigurationError(f"unknown tracker {self.tracker!r}")
        if self.trials_per_point < 1:
            raise ConfigurationError("trials_per_point must be >= 1")
        if any(sr < 0 for sr in self.sweep_sr):
            raise ConfigurationError("sweep_sr values must be >= 0")
        if self.tracker_window < 1 or self.phase_window < 1:
            raise ConfigurationError("windows must be >= 1")


def derive_seed(master_seed: int, sr: float, trial: int) -> int:
    """Stable per-trial seed; adding sweep points never changes other rows."""
    digest = hashlib.sha256(f"{master_seed}:{sr!r}:{trial}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class TrialArtifacts:
    """Metrics row plus the intermediate products tests inspect."""

    report: metrics.MetricsReport
    params: metrics.ParamEstimate | None = None
    crosstalk_db: float | None = None
    est: object | None = None
    trajectory: object | None = None
    equalized: np.ndarray | None = None
    frame: object | None = None
    payload: np.ndarray | None = None


@contextmanager
def _stage(name: str):
    try:
        yield
    except PolTrackError as exc:
        exc.args = (f"{name}: {exc}",)
        raise


def _power(x: np.ndarray) -> float:
    return float(np.mean(np.abs(x) ** 2))


def run_trial(
    plan: TxConfig,
    ch_cfg: ChannelConfig,
    fe_cfg: FrontendConfig,
    tracker: str = "proposed",
    tracker_window: int = 64,
    phase_window: int = 64,
    seed: int = 0,
    keep_artifacts: bool = False,
) -> TrialArtifacts:
    """One frame end to end with explicit seeding, returning a metrics row.

    The seed drives the symbol draw, the channel realization and the
    detection noise through separate substreams; identical inputs give
    bit-identical outputs.
    """
    if tracker not in TRACKERS:
        raise ConfigurationError(f"unknown tracker {tracker!r}")
    plan = replace(plan, seed=int(seed % 2**63))
    ch_cfg = replace(ch_cfg, seed=int(seed % 2**63))
    noise_on = fe_cfg.shot_psd > 0
    n_samples = plan.n_symbols * plan.sps

    with _stage("calibration"):
        scale = dsp.shot_symbol_variance(plan, n_samples) * (
            fe_cfg.shot_psd if noise_on else 1.0
        )
        g0 = dsp.loopback_symbol_gain(plan, fe_cfg)
        amplitude = math.sqrt(scale) / abs(g0)

    with _stage("txgen"):
        frame = txgen.build_frame(plan)
        tx = txgen.synthesize_tx(frame, plan, amplitude)

    with _stage("channel"):
        rx, trajectory = apply_channel(tx, ch_cfg, plan, amplitude)
        del tx

    with _stage("frontend"):
        det_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x0DE7]))
        pair = frontend.heterodyne_detect(
            rx,
            fe_cfg,
            eta=ch_cfg.eta,
            ele_psd=ch_cfg.v_ele * fe_cfg.shot_psd,
            rng=det_rng,
        )
        del rx
        pair = frontend.adc_capture(pair, fe_cfg)

    diverged = False
    est = None
    crosstalk_db = None
    alpha_err = float("nan")
    with _stage("dsp"):
        decim = dsp.tracker_decimation(plan)
        bands = dsp.extract_all_bands(pair, plan, decim, fe_cfg.bpd_bandwidth)
        del pair
        truth = trajectory.decimate(decim)

    if tracker == "proposed":
        with _stage("dsp"):
            est = dsp.estimate_polarization(bands["pt2"], window=tracker_window)
            q_dm = dsp.apply_demux(est.j_inv, bands["q"])
            p1_dm = dsp.apply_demux(est.j_inv, bands["pt1"])
            # leave out the frame-edge transient of the circular band split
            skip = plan.rrc_span * dsp.TRACKER_SPS
            core = slice(skip, len(q_dm) - skip)
            crosstalk_db = 10.0 * math.log10(
                max(_power(q_dm.h[core]), 1e-300) / max(_power(q_dm.v[core]), 1e-300)
            )
            qc = dsp.compensate_phase(q_dm, p1_dm, window=phase_window)
            sym_v, _, _ = dsp.matched_filter_downsample(qc, plan)
        with _stage("metrics"):
            alpha_err, _ = metrics.tracking_error_stats(est, truth)
    elif tracker == "cma":
        with _stage("baseline"):
            demuxed, track = baselines.cma_track(bands["pt2"], bands)
            diverged = track.diverged
            qc = dsp.compensate_phase(
                demuxed["q"], demuxed["pt1"], window=phase_window
            )
            sym_v, _, _ = dsp.matched_filter_downsample(qc, plan)
        with _stage("metrics"):
            cma_est = SimpleNamespace(
                alpha=track.alpha(), dphi=np.zeros(len(truth.alpha))
            )
            alpha_err, _ = metrics.tracking_error_stats(cma_est, truth)
    else:  # fir
        with _stage("baseline"):
            qc = dsp.compensate_phase(
                bands["q"], bands["pt1"], window=phase_window
            )
            sym_v, sym_h, _ = dsp.matched_filter_downsample(qc, plan)
    del bands

    with _stage("metrics"):
        root_scale = math.sqrt(scale)
        edge = plan.rrc_span
        if len(frame) <= 2 * edge:
            raise ConfigurationError("frame too short for edge trimming")
        valid = np.zeros(len(frame), dtype=bool)
        valid[edge:-edge] = True
        train_sel = frame.train_mask & valid
        payload_sel = (~frame.train_mask) & valid
        tx_syms = frame.symbols
        sym_v = sym_v / root_scale

        if tracker == "fir":
            sym_h = sym_h / root_scale
            g_v = np.vdot(tx_syms[train_sel], sym_v[train_sel]) / np.vdot(
                tx_syms[train_sel], tx_syms[train_sel]
            )
            g_h = np.vdot(tx_syms[train_sel], sym_h[train_sel]) / np.vdot(
                tx_syms[train_sel], tx_syms[train_sel]
            )
            g_tot = math.sqrt(abs(g_v) ** 2 + abs(g_h) ** 2)
            if g_tot < 1e-9:
                g_tot = 1e-9
            result = baselines.fir_mimo_track(sym_v / g_tot, sym_h / g_tot, frame)
            diverged = diverged or result.diverged
            eq_out = result.symbols
            rx_chan = eq_out * g_tot
        else:
            gt = complex(
                np.vdot(tx_syms[train_sel], sym_v[train_sel])
                / np.vdot(tx_syms[train_sel], tx_syms[train_sel])
            )
            if abs(gt) < 1e-9:
                gt = 1e-9
            try:
                eq_out = dsp.lms_equalize(sym_v / gt, frame, mu=EQ_MU)
            except DivergenceError:
                diverged = True
                eq_out = sym_v / gt
            rx_chan = eq_out * gt

        params = metrics.estimate_params(
            tx_syms[payload_sel],
            rx_chan[payload_sel],
            v_ele=ch_cfg.v_ele,
            eta=ch_cfg.eta,
            subtract_shot=noise_on,
        )
        evm_db = metrics.evm(eq_out[payload_sel], tx_syms[payload_sel])
        t_skr = min(max(params.t_hat, 1e-12), 1.0)
        skr = metrics.asymptotic_skr(
            metrics.SkrParams(
                v_a=plan.v_a,
                t=t_skr,
                xi=max(params.xi, 0.0),
                eta=ch_cfg.eta,
                v_ele=ch_cfg.v_ele,
                beta=0.95,
                symbol_rate=plan.symbol_rate,
                train_ratio=plan.train_ratio,
            )
        )
        report = metrics.MetricsReport(
            t_hat=params.t_hat,
            xi_hat=params.xi,
            evm_db=evm_db,
            alpha_rms_err=alpha_err,
            skr_bps=skr,
            block_size=int(np.sum(payload_sel)),
            sr=ch_cfg.sr,
            tracker=tracker,
            seed=seed,
            diverged=diverged,
        )
    art = TrialArtifacts(report=report, params=params, crosstalk_db=crosstalk_db)
    if keep_artifacts:
        art.est = est
        art.trajectory = trajectory
        art.equalized = eq_out
        art.frame = frame
        art.payload = payload_sel
    return art


def run_experiment(
    cfg: ExperimentConfig, sr: float, trial: int, seed: int | None = None
) -> metrics.MetricsReport:
    """One sweep cell: trial seed derived from the master seed unless given."""
    if sr < 0 or trial < 0:
        raise ConfigurationError("sr and trial must be >= 0")
    if seed is None:
        seed = derive_seed(cfg.master_seed, sr, trial)
    ch_cfg = replace(cfg.channel, sr=sr)
    art = run_trial(
        cfg.tx,
        ch_cfg,
        cfg.frontend,
        tracker=cfg.tracker,
        tracker_window=cfg.tracker_window,
        phase_window=cfg.phase_window,
        seed=seed,
    )
    return art.report
