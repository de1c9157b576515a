"""Command-line front end: config handling, single runs, scrambling-rate
sweeps with CSV output, SVG chart emission and SNU calibration reporting."""

import argparse
import json
import os
import sys
from dataclasses import asdict, fields, replace

import numpy as np

from . import svgplot
from .channel import ChannelConfig, calibrate_snu
from .dsp import loopback_symbol_gain, shot_symbol_variance
from .errors import ConfigurationError, PolTrackError
from .frontend import FrontendConfig
from .metrics import MetricsReport
from .pipeline import (
    SWEEP_SR_KRAD,
    SWEEP_SR_MRAD,
    ExperimentConfig,
    derive_seed,
    run_experiment,
)
from .txgen import TxConfig

CSV_HEADER = "sr_rad_s,trial,seed,tracker,t_hat,xi_hat_snu,evm_db,alpha_rms_err_rad,skr_bps,diverged"

_SECTIONS = {"tx": TxConfig, "channel": ChannelConfig, "frontend": FrontendConfig}


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["sweep_sr"] = list(cfg.sweep_sr)
    return d


def _build_section(cls, data: dict, name: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be an object")
    top_allowed = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - top_allowed
    if unknown:
        raise ConfigurationError(f"unknown top-level config keys: {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build_section(cls, data[name], name)
    for key in top_allowed - set(_SECTIONS):
        if key in data:
            kwargs[key] = data[key]
    if "sweep_sr" in kwargs:
        kwargs["sweep_sr"] = tuple(float(v) for v in kwargs["sweep_sr"])
    return ExperimentConfig(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config parse error: {exc}") from exc
    return config_from_dict(data)


def report_row(report: MetricsReport, trial: int) -> str:
    return ",".join(
        [
            repr(float(report.sr)),
            str(trial),
            str(report.seed),
            report.tracker,
            repr(float(report.t_hat)),
            repr(float(report.xi_hat)),
            repr(float(report.evm_db)),
            repr(float(report.alpha_rms_err)),
            repr(float(report.skr_bps)),
            str(bool(report.diverged)),
        ]
    )


def _sweep_cell(args):
    cfg, tracker, sr, trial = args
    cfg = replace(cfg, tracker=tracker)
    report = run_experiment(cfg, sr, trial)
    return (sr, tracker, trial, report_row(report, trial))


def run_sweep(cfg: ExperimentConfig, trackers=None, jobs: int = 1) -> list:
    """All sweep cells as sorted CSV rows (without header)."""
    trackers = list(trackers) if trackers else [cfg.tracker]
    cells = [
        (cfg, tracker, sr, trial)
        for tracker in trackers
        for sr in cfg.sweep_sr
        for trial in range(cfg.trials_per_point)
    ]
    if jobs > 1 and len(cells) > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            results = pool.map(_sweep_cell, cells)
    else:
        results = [_sweep_cell(c) for c in cells]
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    return [r[3] for r in results]


def write_sweep_outputs(cfg: ExperimentConfig, rows: list, out_dir: str) -> tuple:
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "sweep.csv")
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row + "\n")
    summary_path = os.path.join(out_dir, "summary.txt")
    with open(summary_path, "w", encoding="ascii") as fh:
        fh.write("per-SR summary (mean / std over trials)\n")
        table = parse_csv_rows(rows)
        for tracker in sorted({r["tracker"] for r in table}):
            for sr in sorted({r["sr_rad_s"] for r in table if r["tracker"] == tracker}):
                sel = [
                    r for r in table if r["tracker"] == tracker and r["sr_rad_s"] == sr
                ]
                xi = np.array([r["xi_hat_snu"] for r in sel])
                skr = np.array([r["skr_bps"] for r in sel])
                fh.write(
                    f"tracker={tracker} sr={sr:.6g} rad/s trials={len(sel)} "
                    f"xi={xi.mean():.6f}/{xi.std():.6f} SNU "
                    f"skr={skr.mean():.4g}/{skr.std():.4g} bit/s\n"
                )
    return csv_path, summary_path


def parse_csv_rows(rows: list) -> list:
    """Typed dicts from data rows; raises on malformed content."""
    out = []
    names = CSV_HEADER.split(",")
    for lineno, row in enumerate(rows, start=2):
        parts = row.split(",")
        if len(parts) != len(names):
            raise ConfigurationError(f"CSV parse error at line {lineno}: field count")
        rec = dict(zip(names, parts))
        try:
            rec["sr_rad_s"] = float(rec["sr_rad_s"])
            rec["trial"] = int(rec["trial"])
            rec["seed"] = int(rec["seed"])
            for key in ("t_hat", "xi_hat_snu", "evm_db", "alpha_rms_err_rad", "skr_bps"):
                rec[key] = float(rec[key])
            rec["diverged"] = rec["diverged"] == "True"
        except ValueError as exc:
            raise ConfigurationError(
                f"CSV parse error at line {lineno}: {exc}"
            ) from exc
        out.append(rec)
    return out


def load_csv(path: str) -> list:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigurationError("CSV parse error at line 1: bad header")
    return parse_csv_rows(lines[1:])


def emit_plots(csv_path: str) -> list:
    """Three SVG charts next to the CSV: xi, SKR and alpha error vs SR."""
    table = load_csv(csv_path)
    base = os.path.splitext(csv_path)[0]
    charts = [
        ("xi_hat_snu", "Excess noise vs scrambling rate", "excess noise (SNU)", "_xi.svg"),
        ("skr_bps", "Secret key rate vs scrambling rate", "SKR (bit/s)", "_skr.svg"),
        (
            "alpha_rms_err_rad",
            "Tracking error vs scrambling rate",
            "alpha RMS error (rad)",
            "_alpha.svg",
        ),
    ]
    written = []
    for column, title, ylabel, suffix in charts:
        series = []
        for tracker in sorted({r["tracker"] for r in table}):
            rows = [
                r
                for r in table
                if r["tracker"] == tracker and np.isfinite(r[column])
            ]
            if not rows:
                continue
            series.append(
                svgplot.Series(
                    x=[r["sr_rad_s"] for r in rows],
                    y=[r[column] for r in rows],
                    label=f"{tracker} trials",
                    mode="scatter",
                )
            )
            srs = sorted({r["sr_rad_s"] for r in rows})
            means = [
                float(np.mean([r[column] for r in rows if r["sr_rad_s"] == sr]))
                for sr in srs
            ]
            series.append(
                svgplot.Series(x=srs, y=means, label=f"{tracker} mean", mode="both")
            )
        if not series:
            series = [svgplot.Series(x=[0.0], y=[0.0], label="no data", mode="scatter")]
        path = base + suffix
        svgplot.write_chart(path, series, title, "scrambling rate (rad/s)", ylabel)
        written.append(path)
    return written


def _cmd_init_config(args) -> int:
    cfg = ExperimentConfig()
    with open(args.output, "w", encoding="ascii") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")
    print(f"wrote default config to {args.output}")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.tracker:
        cfg = replace(cfg, tracker=args.tracker)
    report = run_experiment(cfg, args.sr, args.trial)
    print(CSV_HEADER)
    print(report_row(report, args.trial))
    return 0


_FIGURES = {
    "3": dict(trackers=["proposed"], sweep_sr=SWEEP_SR_KRAD, windows=64, mode="walk"),
    "4": dict(
        trackers=["proposed", "cma", "fir"],
        sweep_sr=SWEEP_SR_KRAD,
        windows=64,
        mode="walk",
    ),
    "5": dict(trackers=["proposed"], sweep_sr=SWEEP_SR_MRAD, windows=1, mode="rate"),
}


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    trackers = None
    if args.figure:
        preset = _FIGURES[args.figure]
        trackers = preset["trackers"]
        cfg = replace(
            cfg,
            sweep_sr=tuple(preset["sweep_sr"]),
            tracker_window=preset["windows"],
            phase_window=preset["windows"],
            channel=replace(cfg.channel, mode=preset["mode"]),
        )
    rows = run_sweep(cfg, trackers=trackers, jobs=args.jobs)
    csv_path, summary_path = write_sweep_outputs(cfg, rows, cfg.out_dir)
    print(f"wrote {len(rows)} rows to {csv_path}")
    print(f"summary in {summary_path}")
    return 0


def _cmd_plot(args) -> int:
    for path in emit_plots(args.csv):
        print(f"wrote {path}")
    return 0


def _cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    n_samples = cfg.tx.n_symbols * cfg.tx.sps
    analytic = shot_symbol_variance(cfg.tx, n_samples) * cfg.frontend.shot_psd
    g0 = loopback_symbol_gain(cfg.tx, cfg.frontend)
    print(f"analytic shot scale: {analytic!r} (units^2 per SNU)")
    print(f"loopback symbol gain: {abs(g0)!r}")
    if cfg.frontend.shot_psd > 0:
        cal = calibrate_snu(cfg.channel, cfg.frontend, cfg.tx)
        print(f"measured shot scale: {cal.scale!r}")
        print(f"measured electronic variance: {cal.ele_var!r}")
        print(f"measured/analytic ratio: {cal.scale / analytic!r}")
    else:
        print("shot_psd is zero, skipping measured calibration")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poltrack",
        description="Pilot-tone polarization-tracking CV-QKD link simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-config", help="write a config file with all defaults")
    p.add_argument("--output", "-o", default="poltrack.json")
    p.set_defaults(func=_cmd_init_config)

    p = sub.add_parser("run", help="run a single trial")
    p.add_argument("--config", required=True)
    p.add_argument("--sr", type=float, required=True)
    p.add_argument("--trial", type=int, required=True)
    p.add_argument("--tracker", choices=("proposed", "cma", "fir"))
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run the configured scrambling-rate sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--figure", choices=tuple(_FIGURES))
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("plot", help="emit SVG charts from a sweep CSV")
    p.add_argument("--csv", required=True)
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("calibrate", help="report the SNU calibration of the chain")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except PolTrackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
