"""Shared fixtures: small noiseless frames reused across DSP tests."""

import numpy as np
import pytest

from poltrack import dsp, frontend, txgen
from poltrack.channel import ChannelConfig, apply_channel
from poltrack.frontend import FrontendConfig
from poltrack.txgen import TxConfig


SMALL_N = 20_000


@pytest.fixture(scope="session")
def small_plan():
    return TxConfig(n_symbols=SMALL_N, seed=11)


@pytest.fixture(scope="session")
def noiseless_frontend():
    return FrontendConfig(shot_psd=0.0, lo_linewidth=0.0)


def detect_noiseless(tx, fe):
    pair = frontend.heterodyne_detect(tx, fe, rng=np.random.default_rng(0))
    return frontend.adc_capture(pair, fe)


@pytest.fixture(scope="session")
def static_chain(small_plan, noiseless_frontend):
    """Noiseless frame through the static (0.3, 0.2, -0.1) channel.

    Returns (frame, bands, trajectory, plan, fe) at the tracker rate.
    """
    plan = small_plan
    fe = noiseless_frontend
    ch = ChannelConfig(
        mode="static",
        alpha0=0.3,
        phi1_0=0.2,
        phi2_0=-0.1,
        loss_db=0.0,
        eta=1.0,
        v_ele=0.0,
        xi_ch=0.0,
        linewidth_tx=0.0,
        seed=11,
    )
    frame = txgen.build_frame(plan)
    tx = txgen.synthesize_tx(frame, plan)
    rx, trajectory = apply_channel(tx, ch, plan)
    pair = detect_noiseless(rx, fe)
    decim = dsp.tracker_decimation(plan)
    bands = dsp.extract_all_bands(pair, plan, decim, fe.bpd_bandwidth)
    return frame, bands, trajectory.decimate(decim), plan, fe
