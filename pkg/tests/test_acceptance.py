"""Acceptance suite: end-to-end claims of the tracking study.

Each test prints one summary line with its measured numbers so a full run
reads as a scorecard.  The heavy sweeps use paired trial seeds across
scrambling rates, which cancels the shared symbol-draw fluctuation from the
penalty estimates.
"""

import time

import numpy as np

from poltrack import cli, dsp, metrics, txgen
from poltrack.channel import ChannelConfig
from poltrack.frontend import FrontendConfig
from poltrack.jones import JonesMatrix
from poltrack.metrics import SkrParams, asymptotic_skr
from poltrack.pipeline import ExperimentConfig, derive_seed, run_trial
from poltrack.txgen import TxConfig

T_PAPER = 10**-0.4971


def announce(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"[{name}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{name}: {detail}"


def walk_channel(sr):
    return ChannelConfig(mode="walk" if sr else "static", sr=sr)


def sweep_means(plan, sr_list, tracker, trials, tracker_window=64, phase_window=64,
                mode="walk", master_seed=0):
    """Mean xi/t/divergence per SR with trial seeds shared across SRs."""
    fe = FrontendConfig()
    out = {}
    for sr in sr_list:
        ch = ChannelConfig(mode=mode if sr else "static", sr=sr)
        xi, t_hat, div = [], [], 0
        for trial in range(trials):
            seed = derive_seed(master_seed, 0.0, trial)
            r = run_trial(
                plan, ch, fe, tracker,
                tracker_window=tracker_window, phase_window=phase_window,
                seed=seed,
            ).report
            xi.append(r.xi_hat)
            t_hat.append(r.t_hat)
            div += int(r.diverged)
        out[sr] = (float(np.mean(xi)), float(np.mean(t_hat)), div)
    return out


class TestAcceptance:
    def test_criterion_1_noiseless_closure(self, capsys):
        plan = TxConfig(n_symbols=100_000, seed=0)
        fe = FrontendConfig(shot_psd=0.0, lo_linewidth=0.0)
        rng = np.random.default_rng(20260825)
        worst_evm, worst_xt, worst_time = -np.inf, -np.inf, 0.0
        for _ in range(32):
            a, p1, p2 = rng.uniform(-np.pi, np.pi, 3)
            ch = ChannelConfig(
                alpha0=a, phi1_0=p1, phi2_0=p2,
                loss_db=0.0, eta=1.0, v_ele=0.0, xi_ch=0.0, linewidth_tx=0.0,
            )
            t0 = time.process_time()
            art = run_trial(plan, ch, fe, seed=int(rng.integers(2**31)))
            dt = time.process_time() - t0
            worst_evm = max(worst_evm, art.report.evm_db)
            worst_xt = max(worst_xt, art.crosstalk_db)
            worst_time = max(worst_time, dt)
        ok = worst_evm < -60.0 and worst_xt < -80.0 and worst_time < 10.0
        announce(
            capsys, "criterion 1", ok,
            f"32 static noiseless channels, worst EVM {worst_evm:.1f} dB, "
            f"worst crosstalk {worst_xt:.1f} dB, worst frame time {worst_time:.1f} s",
        )

    def test_criterion_2_inverse_jones_contract(self, capsys):
        rng = np.random.default_rng(7)
        n = 10_000
        a = rng.uniform(-np.pi, np.pi, n)
        p1 = rng.uniform(-np.pi, np.pi, n)
        p2 = rng.uniform(-np.pi, np.pi, n)
        inv = dsp.build_inverse_jones(a, -(p1 + p2))
        j = JonesMatrix.from_angles(a, p1, p2)
        phi = (p1 - p2) / 2.0
        err = max(
            np.max(np.abs(inv.m_vv * j.m_vv + inv.m_vh * j.m_hv - np.exp(1j * phi))),
            np.max(np.abs(inv.m_hv * j.m_vh + inv.m_hh * j.m_hh - np.exp(-1j * phi))),
            np.max(np.abs(inv.m_vv * j.m_vh + inv.m_vh * j.m_hh)),
            np.max(np.abs(inv.m_hv * j.m_vv + inv.m_hh * j.m_hv)),
        )
        ok = err < 1e-12
        announce(
            capsys, "criterion 2", ok,
            f"inverse times channel is phase-diagonal within {err:.2e} "
            f"over {n} random triples",
        )

    def test_criterion_3_krad_regime(self, capsys):
        plan = TxConfig(n_symbols=250_000, seed=0)
        sr_list = (0.0, 0.63e3, 1.26e3, 3.14e3, 6.28e3, 12.57e3)
        # CPU time, not wall time: the budget is about the cost of the
        # sweep, and wall time also counts other tenants of a shared host
        t0 = time.process_time()
        means = sweep_means(plan, sr_list, "proposed", trials=20)
        runtime = time.process_time() - t0
        xi0 = means[0.0][0]
        in_band = all(0.02 <= means[sr][0] <= 0.06 for sr in sr_list)
        penalty = max(means[sr][0] - xi0 for sr in sr_list[1:])
        ok = in_band and penalty < 0.02 and runtime < 900.0
        detail = ", ".join(f"{sr / 1e3:g}k:{means[sr][0]:.4f}" for sr in sr_list)
        announce(
            capsys, "criterion 3", ok,
            f"walk-mode mean xi per SR {{{detail}}} SNU, worst penalty "
            f"{penalty:+.4f} SNU, runtime {runtime:.0f} s",
        )

    def test_criterion_4_mrad_regime(self, capsys):
        plan = TxConfig(n_symbols=150_000, seed=0)
        sr_list = (
            0.0,
            2 * np.pi * 1e6,
            2 * np.pi * 5e6,
            2 * np.pi * 10e6,
            2 * np.pi * 20e6,
            2 * np.pi * 30e6,
            439.82e6,
        )
        t0 = time.process_time()
        means = sweep_means(
            plan, sr_list, "proposed", trials=20,
            tracker_window=1, phase_window=1, mode="rate",
        )
        runtime = time.process_time() - t0
        xi0 = means[0.0][0]
        slow = [means[sr][0] - xi0 for sr in sr_list[1:-1]]
        fast = means[sr_list[-1]][0] - xi0
        ok = (
            max(abs(p) for p in slow) < 0.01
            and fast > 3.0 * max(max(slow), 1e-6)
            and runtime < 600.0
        )
        announce(
            capsys, "criterion 4", ok,
            f"rate-mode penalties up to 188.5 Mrad/s within "
            f"{max(abs(p) for p in slow):.4f} SNU, penalty {fast:+.3f} SNU at "
            f"439.82 Mrad/s, runtime {runtime:.0f} s",
        )

    def test_criterion_5_baseline_ordering(self, capsys):
        plan = TxConfig(n_symbols=500_000, seed=0)
        sr_list = (0.0, 6.28e3, 12.57e3)
        res = {
            tracker: sweep_means(plan, sr_list, tracker, trials=10)
            for tracker in ("proposed", "cma", "fir")
        }
        ordered = all(
            res["proposed"][sr][0] < res["cma"][sr][0]
            and res["proposed"][sr][0] < res["fir"][sr][0]
            for sr in sr_list[1:]
        )
        pen = {
            tracker: res[tracker][12.57e3][0] - res[tracker][0.0][0]
            for tracker in res
        }
        baselines_fail = all(
            pen[tracker] > 0.05 or res[tracker][12.57e3][2] > 0
            for tracker in ("cma", "fir")
        )
        ok = ordered and baselines_fail and pen["proposed"] < 0.02
        detail = ", ".join(
            f"{tr}: xi@12.57k {res[tr][12.57e3][0]:.4f} (penalty {pen[tr]:+.4f}, "
            f"div {res[tr][12.57e3][2]}/10)"
            for tr in ("proposed", "cma", "fir")
        )
        announce(capsys, "criterion 5", ok, detail)

    def test_criterion_6_estimator_fidelity(self, capsys):
        plan = TxConfig(n_symbols=500_000, seed=0)
        fe = FrontendConfig()
        ch = ChannelConfig()
        xi, t_hat = [], []
        for trial in range(50):
            r = run_trial(plan, ch, fe, seed=derive_seed(1, 0.0, trial)).report
            xi.append(r.xi_hat)
            t_hat.append(r.t_hat)
        xi_m, t_m = float(np.mean(xi)), float(np.mean(t_hat))
        ok = abs(xi_m - 0.030) < 0.005 and abs(t_m - T_PAPER) / T_PAPER < 0.01
        announce(
            capsys, "criterion 6", ok,
            f"50 trials: mean xi {xi_m:.4f} SNU (injected 0.030), "
            f"mean t {t_m:.4f} (true {T_PAPER:.4f})",
        )

    def test_criterion_7_skr_surrogate(self, capsys):
        k = asymptotic_skr(SkrParams())
        anchor = 51.60e6
        within = anchor / 3.0 < k < anchor * 3.0
        xi_grid = [asymptotic_skr(SkrParams(xi=x)) for x in np.linspace(0.0, 0.1, 11)]
        t_grid = [asymptotic_skr(SkrParams(t=t)) for t in np.linspace(0.05, 0.4, 8)]
        mono = all(a > b for a, b in zip(xi_grid, xi_grid[1:])) and all(
            a <= b for a, b in zip(t_grid, t_grid[1:])
        )
        ok = within and k > 0 and mono
        announce(
            capsys, "criterion 7", ok,
            f"surrogate SKR {k / 1e6:.2f} Mbit/s vs 51.60 Mbit/s reference, "
            f"monotone in xi and loss",
        )

    def test_criterion_8_determinism(self, capsys, tmp_path):
        cfg = ExperimentConfig(
            tx=TxConfig(n_symbols=5000, seed=1),
            sweep_sr=(0.0, 1e3),
            trials_per_point=2,
            master_seed=3,
        )
        serial = cli.run_sweep(cfg, jobs=1)
        parallel = cli.run_sweep(cfg, jobs=2)
        again = cli.run_sweep(cfg, jobs=1)
        a, _ = cli.write_sweep_outputs(cfg, serial, str(tmp_path / "a"))
        b, _ = cli.write_sweep_outputs(cfg, parallel, str(tmp_path / "b"))
        ok = (
            serial == parallel == again
            and open(a, "rb").read() == open(b, "rb").read()
        )
        announce(
            capsys, "criterion 8", ok,
            f"{len(serial)} sweep rows byte-identical across serial, parallel "
            f"and repeated runs",
        )

    def test_criterion_9_property_suite(self, capsys):
        checks = {}

        theta = np.cumsum(np.random.default_rng(0).uniform(-3, 3, 5000))
        rebuilt = dsp.unwrap(np.angle(np.exp(1j * theta)))
        checks["unwrap"] = bool(
            np.allclose(rebuilt - rebuilt[0], theta - theta[0], atol=1e-9)
        )

        frame = txgen.sample_dg256qam(1_000_000, 6.15, seed=9)
        checks["dg_variance"] = bool(
            abs(np.var(frame.symbols.real) - 6.15) / 6.15 < 0.005
            and abs(np.var(frame.symbols.imag) - 6.15) / 6.15 < 0.005
        )

        rng = np.random.default_rng(10)
        j = JonesMatrix.from_angles(
            rng.uniform(-np.pi, np.pi, 10_000),
            rng.uniform(-np.pi, np.pi, 10_000),
            rng.uniform(-np.pi, np.pi, 10_000),
        )
        checks["jones_unitarity"] = bool(j.unitarity_error() < 1e-12)

        plan = TxConfig(n_symbols=20_000, seed=31)
        fr = txgen.build_frame(plan)
        m = np.array([[0.95, 0.1], [-0.1, 0.95]])
        iq = m @ np.stack([fr.symbols.real, fr.symbols.imag])
        iq = iq + 0.05 * rng.standard_normal(iq.shape)
        rx = iq[0] + 1j * iq[1]
        out = dsp.lms_equalize(rx, fr, mu=3e-4)
        payload = ~fr.train_mask
        g_i = np.dot(fr.symbols.real, out.real) / np.dot(out.real, out.real)
        g_q = np.dot(fr.symbols.imag, out.imag) / np.dot(out.imag, out.imag)
        fit = g_i * out.real + 1j * g_q * out.imag
        mse_lms = np.mean(np.abs(fit[payload] - fr.symbols[payload]) ** 2)
        x = np.stack([rx.real, rx.imag])
        d = np.stack([fr.symbols.real, fr.symbols.imag])
        w = d[:, fr.train_mask] @ np.linalg.pinv(x[:, fr.train_mask])
        y = w @ x
        mse_ls = np.mean(
            (y[0, payload] - d[0, payload]) ** 2
            + (y[1, payload] - d[1, payload]) ** 2
        )
        checks["lms_vs_ls"] = bool(10 * np.log10(mse_lms / mse_ls) < 1.0)

        from poltrack.channel import SnuCalibration

        tx = np.sqrt(6.15) * (
            rng.standard_normal(100_000) + 1j * rng.standard_normal(100_000)
        )
        rx2 = 0.5 * tx + 1.1 * (
            rng.standard_normal(len(tx)) + 1j * rng.standard_normal(len(tx))
        )
        e1 = metrics.estimate_params(
            tx, rx2, cal=SnuCalibration(shot_plus_ele_var=1.0, ele_var=0.0)
        )
        e2 = metrics.estimate_params(
            tx,
            np.sqrt(2.0) * rx2,
            cal=SnuCalibration(shot_plus_ele_var=2.0, ele_var=0.0),
        )
        checks["snu_invariance"] = bool(abs(e1.xi - e2.xi) < 1e-12)

        ok = all(checks.values())
        detail = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items())
        announce(capsys, "criterion 9", ok, detail)
