"""Channel tests: Jones algebra, trajectories, loss, noise calibration."""

import numpy as np
import pytest

from poltrack import txgen
from poltrack.channel import (
    ChannelConfig,
    apply_channel,
    calibrate_snu,
    jones_at,
    make_trajectory,
    wiener_phase,
)
from poltrack.errors import CalibrationError, ConfigurationError
from poltrack.frontend import FrontendConfig
from poltrack.jones import JonesMatrix
from poltrack.txgen import TxConfig


class TestJonesMatrix:
    def test_identity_at_zero_angles(self):
        j = JonesMatrix.from_angles(0.0, 0.0, 0.0)
        assert j.m_vv == 1.0 and j.m_hh == 1.0
        assert j.m_vh == 0.0 and j.m_hv == 0.0

    def test_rate_mode_is_planar_rotation(self):
        cfg = ChannelConfig(mode="rate", sr=188.50e6)
        j = jones_at(1e-9, cfg)
        w = 0.18850
        assert abs(j.m_vv - np.cos(w)) < 1e-9
        assert abs(j.m_vh - np.sin(w)) < 1e-9
        assert abs(j.m_hv + np.sin(w)) < 1e-9
        assert abs(j.m_hh - np.cos(w)) < 1e-9

    def test_unitarity_over_random_draws(self):
        rng = np.random.default_rng(8)
        alpha = rng.uniform(-np.pi, np.pi, 10_000)
        phi1 = rng.uniform(-np.pi, np.pi, 10_000)
        phi2 = rng.uniform(-np.pi, np.pi, 10_000)
        j = JonesMatrix.from_angles(alpha, phi1, phi2)
        assert j.unitarity_error() < 1e-12

    def test_apply_matches_naive_multiply(self):
        rng = np.random.default_rng(9)
        v = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        h = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        j = JonesMatrix.from_angles(0.3, 0.2, -0.1)
        out_v, out_h = j.apply(v, h)
        m = np.array([[j.m_vv, j.m_vh], [j.m_hv, j.m_hh]])
        for k in range(64):
            ref = m @ np.array([v[k], h[k]])
            assert abs(out_v[k] - ref[0]) < 1e-12
            assert abs(out_h[k] - ref[1]) < 1e-12

    def test_hermitian_inverts_unitary(self):
        j = JonesMatrix.from_angles(0.7, -0.4, 0.9)
        prod = j.hermitian().matmul(j)
        assert abs(prod.m_vv - 1.0) < 1e-12
        assert abs(prod.m_hh - 1.0) < 1e-12
        assert abs(prod.m_vh) < 1e-12
        assert abs(prod.m_hv) < 1e-12


class TestTrajectory:
    def test_static_holds_initial_angles(self):
        cfg = ChannelConfig(alpha0=0.3, phi1_0=0.2, phi2_0=-0.1)
        tr = make_trajectory(cfg, 100, 1e9)
        assert np.all(tr.alpha == 0.3)
        assert np.all(tr.phi1 == 0.2)
        assert np.all(tr.phi2 == -0.1)

    def test_rate_mode_slope(self):
        cfg = ChannelConfig(mode="rate", sr=1e6)
        tr = make_trajectory(cfg, 1000, 1e9)
        slopes = np.diff(tr.alpha) * 1e9
        assert np.allclose(slopes, -1e6)

    def test_walk_speed_matches_sr(self):
        cfg = ChannelConfig(mode="walk", sr=5e3, seed=4)
        fs = 1e7
        tr = make_trajectory(cfg, 200_000, fs)
        inc = np.diff(np.stack([tr.alpha, tr.phi1, tr.phi2], axis=1), axis=0)
        speed = np.linalg.norm(inc, axis=1) * fs
        assert np.allclose(speed, 5e3)

    def test_walk_is_seed_deterministic(self):
        cfg = ChannelConfig(mode="walk", sr=1e3, seed=10)
        a = make_trajectory(cfg, 5000, 1e7)
        b = make_trajectory(cfg, 5000, 1e7)
        assert np.array_equal(a.alpha, b.alpha)

    def test_decimate_keeps_every_kth(self):
        cfg = ChannelConfig(mode="walk", sr=1e3, seed=2)
        tr = make_trajectory(cfg, 1000, 1e7)
        dec = tr.decimate(5)
        assert np.array_equal(dec.alpha, tr.alpha[::5])
        assert dec.sample_rate == tr.sample_rate / 5


class TestWienerPhase:
    def test_variance_growth(self):
        rng = np.random.default_rng(3)
        lw, fs, n, reps = 1e5, 1e8, 2000, 400
        final = [
            wiener_phase(np.random.default_rng(s), n, lw, fs)[-1] for s in range(reps)
        ]
        expected = 2.0 * np.pi * lw * (n - 1) / fs
        assert abs(np.var(final) - expected) / expected < 0.25


class TestApplyChannel:
    def test_identity_passthrough(self):
        cfg = TxConfig(n_symbols=256, seed=1)
        frame = txgen.build_frame(cfg)
        tx = txgen.synthesize_tx(frame, cfg)
        ch = ChannelConfig(loss_db=0.0, xi_ch=0.0, linewidth_tx=0.0)
        rx, _ = apply_channel(tx, ch, cfg)
        assert np.array_equal(rx.v, tx.v)
        assert np.array_equal(rx.h, tx.h)

    def test_loss_scales_power(self):
        cfg = TxConfig(n_symbols=2048, seed=2)
        frame = txgen.build_frame(cfg)
        tx = txgen.synthesize_tx(frame, cfg)
        ch = ChannelConfig(loss_db=4.971, xi_ch=0.0, linewidth_tx=0.0)
        rx, _ = apply_channel(tx, ch, cfg)
        ratio = rx.power() / tx.power()
        assert abs(ratio - 10**-0.4971) / 10**-0.4971 < 1e-3

    def test_static_rotation_matches_direct_multiply(self):
        cfg = TxConfig(n_symbols=128, seed=3)
        frame = txgen.build_frame(cfg)
        tx = txgen.synthesize_tx(frame, cfg)
        ch = ChannelConfig(
            alpha0=0.3, phi1_0=0.2, phi2_0=-0.1, loss_db=0.0, xi_ch=0.0, linewidth_tx=0.0
        )
        rx, _ = apply_channel(tx, ch, cfg)
        j = JonesMatrix.from_angles(0.3, 0.2, -0.1)
        ref_v, ref_h = j.apply(tx.v, tx.h)
        assert np.allclose(rx.v, ref_v, atol=1e-12)
        assert np.allclose(rx.h, ref_h, atol=1e-12)

    def test_xi_injection_requires_plan(self):
        cfg = TxConfig(n_symbols=64, seed=4)
        frame = txgen.build_frame(cfg)
        tx = txgen.synthesize_tx(frame, cfg)
        ch = ChannelConfig(xi_ch=0.03)
        with pytest.raises(ConfigurationError):
            apply_channel(tx, ch, None)

    def test_mode_validation(self):
        with pytest.raises(ConfigurationError):
            ChannelConfig(mode="spin")


class TestCalibration:
    def test_electronic_share_and_linearity(self):
        plan = TxConfig(n_symbols=100_000, seed=6)
        ch = ChannelConfig()
        fe = FrontendConfig()
        cal = calibrate_snu(ch, fe, plan)
        assert abs(cal.ele_var / cal.scale - 0.15) < 0.02 * 0.15 / 0.15 + 0.02
        fe2 = FrontendConfig(shot_psd=2.0)
        cal2 = calibrate_snu(ch, fe2, plan)
        assert abs(cal2.scale / cal.scale - 2.0) < 0.02

    def test_no_electronic_noise(self):
        plan = TxConfig(n_symbols=50_000, seed=7)
        ch = ChannelConfig(v_ele=0.0)
        fe = FrontendConfig()
        cal = calibrate_snu(ch, fe, plan)
        assert abs(cal.ele_var) < 1e-3 * cal.scale

    def test_nonpositive_scale_raises(self):
        from poltrack.channel import SnuCalibration

        with pytest.raises(CalibrationError):
            SnuCalibration(shot_plus_ele_var=1.0, ele_var=1.5).scale
