"""Command-line entry point: run experiments from a config file and emit
CSV curves, JSON summaries, and a run manifest.

Exit codes: 0 success, 2 config error, 3 runtime error, 4 completed with
warnings (non-convergence / lower-bound flags), 64 usage error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, experiments, optics, simulate, spectra, tomography
from .config import ConfigError, NodeConfig, load_config
from .states import MeasurementSetting, _KETS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_WARNINGS = 4
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    """argparse's default error exit (2) collides with config errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class UsageError(ValueError):
    pass


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


class _Run:
    """Collects output paths and warnings, writes the manifest at the end."""

    def __init__(self, config: NodeConfig, out_dir: str, command: list):
        self.config = config
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.start = _utc_now()
        self.outputs = []
        self.warnings = []

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(name)
        return p

    def write_json(self, name: str, payload: dict) -> None:
        with open(self.path(name), "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")

    def warn(self, message: str) -> None:
        self.warnings.append(message)
        print(f"warning: {message}", file=sys.stderr)

    def finish(self) -> int:
        manifest = {
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed,
            "version": __version__,
            "command": self.command,
            "start_time": self.start,
            "end_time": _utc_now(),
            "outputs": sorted(self.outputs),
            "warnings": self.warnings,
        }
        with open(self.out / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        return EXIT_WARNINGS if self.warnings else EXIT_OK


def _emit_metrics(run: _Run, name: str, payload: dict, fmt: str) -> None:
    if fmt == "json":
        run.write_json(f"{name}.json", payload)
    else:
        with open(run.path(f"{name}.csv"), "w") as f:
            f.write("key,value\n")
            for k, v in sorted(payload.items()):
                f.write(f"{k},{v}\n")


def _cmd_histograms(args, config: NodeConfig, mode: str) -> int:
    if mode == "solo":
        metrics, runs = experiments.solo_metrics(config, args.trials)
    else:
        metrics, runs = experiments.source_metrics(config, args.trials)
    run = _Run(config, args.out, sys.argv[1:])
    for cond in ("memory", "input", "no_input"):
        getattr(runs, cond).to_csv(run.path(f"hist_{cond}.csv"))
    _emit_metrics(run, "metrics", metrics.to_json_dict(), args.format)
    if metrics.snr_lower_bound:
        run.warn("empty noise window: SNR is a lower bound")
    return run.finish()


def _parse_settings(text: str):
    settings = []
    for i, token in enumerate(text.split(",")):
        token = token.strip()
        if len(token) != 2 or any(c not in _KETS for c in token):
            raise ConfigError(f"settings[{i}]: malformed setting {token!r}")
        settings.append(MeasurementSetting.from_labels(token[0], token[1]))
    return settings


def _cmd_tomography(args, config: NodeConfig) -> int:
    settings = _parse_settings(args.settings) if args.settings else None
    counts = simulate.run_tomography(
        config, settings=settings, duration_per_setting_s=args.duration
    )
    if not counts.informationally_complete:
        raise ConfigError("settings: not informationally complete")
    result = tomography.mle_tomography(counts.counts, counts.settings)
    run = _Run(config, args.out, sys.argv[1:])
    with open(run.path("counts.csv"), "w") as f:
        f.write("setting,triggers,coincidences\n")
        for s, t, c in zip(counts.settings, counts.triggers_per_setting,
                           counts.counts):
            f.write(f"{s.label},{int(t)},{int(c)}\n")
    run.write_json("tomography.json", result.to_json_dict())
    if not result.converged:
        run.warn("likelihood optimizer did not report convergence")
    return run.finish()


def _cmd_sweep_window(args, config: NodeConfig) -> int:
    sweep = experiments.detection_window_sweep(config, args.trials)
    run = _Run(config, args.out, sys.argv[1:])
    sweep.to_csv(run.path("sweep.csv"))
    run.write_json("sweep.json", {
        "window_ns": (sweep.window_sizes_s * 1e9).tolist(),
        "rate_pairs_per_s": sweep.rates_pairs_per_s.tolist(),
        "fidelity": sweep.fidelities.tolist(),
        "per_trial": sweep.per_trial_success.tolist(),
    })
    return run.finish()


def _cmd_utility(args, config: NodeConfig) -> int:
    times = np.linspace(0.0, args.max_time_us * 1e-6, args.points)
    fids = experiments.model_fidelity_curve(config, times)
    run = _Run(config, args.out, sys.argv[1:])
    with open(run.path("utility.csv"), "w") as f:
        f.write("time_us,fidelity\n")
        for t, fi in zip(times, fids):
            f.write(f"{t * 1e6:.4f},{fi:.6f}\n")
    summary = {}
    unbounded = False
    for thr in (experiments.DISTILLATION_THRESHOLD,
                experiments.SEPARABILITY_THRESHOLD):
        ut = analysis.utility_time(times, fids, thr)
        summary[f"utility_time_us_at_{thr}"] = ut.time_s * 1e6
        summary[f"bounded_at_{thr}"] = ut.bounded
        unbounded = unbounded or not ut.bounded
    run.write_json("utility.json", summary)
    if unbounded:
        run.warn("fidelity stays above a threshold over the scanned range")
    return run.finish()


def _cmd_spectral_scan(args, config: NodeConfig) -> int:
    model = config.spectral_model
    cavity = config.source.telecom_cavity
    mem_model = config.memory_acceptance
    detunings = np.linspace(-args.band_ghz / 2.0, args.band_ghz / 2.0,
                            args.points) * 1e9
    run = _Run(config, args.out, sys.argv[1:])
    with open(run.path("spectral.csv"), "w") as f:
        f.write("cavity_detuning_ghz,heralding_eta,relative_rate,"
                "memory_acceptance\n")
        for d in detunings:
            eta, rate = spectra.heralding_vs_cavity_detuning(model, cavity, d)
            mem = spectra.memory_efficiency_vs_detuning(
                mem_model, model.paired_nir_detuning(d)
            )
            f.write(f"{d / 1e9:.4f},{eta:.6f},{rate:.6g},{float(mem):.6f}\n")
    best = spectra.select_operating_point(model, cavity, mem_model,
                                          scan_band_hz=args.band_ghz * 1e9)
    eta, rate = spectra.heralding_vs_cavity_detuning(model, cavity, best)
    run.write_json("spectral.json", {
        "operating_point_ghz": best / 1e9,
        "heralding_eta_at_operating_point": eta,
        "relative_rate_at_operating_point": rate,
    })
    return run.finish()


def _cmd_filter_design(args, config: NodeConfig) -> int:
    cascade = config.filter_cascade
    run = _Run(config, args.out, sys.argv[1:])
    detunings = np.linspace(-args.band_ghz / 2.0, args.band_ghz / 2.0,
                            args.points) * 1e9
    with open(run.path("filter.csv"), "w") as f:
        f.write("detuning_ghz,suppression_db,transmission\n")
        for d in detunings:
            f.write(
                f"{d / 1e9:.4f},"
                f"{optics.cascade_suppression_db(cascade, d):.4f},"
                f"{optics.cascade_transmission(cascade, d):.6g}\n"
            )
    run.write_json("filter.json", {
        "query_detuning_ghz": args.query_ghz,
        "suppression_db_at_query": optics.cascade_suppression_db(
            cascade, args.query_ghz * 1e9
        ),
        "effective_fwhm_ghz": optics.cascade_effective_fwhm(cascade) / 1e9,
    })
    return run.finish()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vapornode",
                     description="Warm-vapor memory node simulator")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p, trials=False):
        p.add_argument("--config", default=None, help="YAML config path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default="run_out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="json")
        if trials:
            p.add_argument("--trials", type=int, default=1_000_000)

    common(sub.add_parser("solo", help="clocked weak-pulse histograms"),
           trials=True)
    common(sub.add_parser("source", help="triggered-photon histograms"),
           trials=True)

    p = sub.add_parser("tomography", help="state reconstruction")
    common(p)
    p.add_argument("--duration", type=float, default=12.5,
                   help="seconds per setting")
    p.add_argument("--settings", default=None,
                   help="comma-separated label pairs, e.g. HH,HV,...")

    p = sub.add_parser("sweep-window", help="rate/fidelity vs window size")
    common(p, trials=True)

    p = sub.add_parser("utility", help="model fidelity decay and utility time")
    common(p)
    p.add_argument("--max-time-us", type=float, default=8.0)
    p.add_argument("--points", type=int, default=401)

    p = sub.add_parser("spectral-scan", help="heralding vs cavity detuning")
    common(p)
    p.add_argument("--band-ghz", type=float, default=7.0)
    p.add_argument("--points", type=int, default=141)

    p = sub.add_parser("filter-design", help="cascade suppression curve")
    common(p)
    p.add_argument("--band-ghz", type=float, default=16.0)
    p.add_argument("--points", type=int, default=321)
    p.add_argument("--query-ghz", type=float, default=6.8347)
    return parser


_COMMANDS = {
    "solo": lambda a, c: _cmd_histograms(a, c, "solo"),
    "source": lambda a, c: _cmd_histograms(a, c, "source"),
    "tomography": _cmd_tomography,
    "sweep-window": _cmd_sweep_window,
    "utility": _cmd_utility,
    "spectral-scan": _cmd_spectral_scan,
    "filter-design": _cmd_filter_design,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    if getattr(args, "trials", 1) < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    try:
        config = load_config(args.config, overrides=overrides)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return _COMMANDS[args.cmd](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
