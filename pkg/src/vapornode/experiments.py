"""End-to-end experiment orchestration.

Each routine runs the Monte Carlo conditions it needs, applies the histogram
analysis, and returns a plain result record that the CLI can serialize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis, simulate, tomography
from .config import NodeConfig
from .histograms import Histogram
from .states import fidelity_from_snr

# fidelity thresholds of interest for the utility-time figure of merit:
# distillation with two-copy purification, and any entanglement at all
DISTILLATION_THRESHOLD = 0.775
SEPARABILITY_THRESHOLD = 0.50


@dataclass
class ConditionRuns:
    memory: Histogram
    input: Histogram
    no_input: Histogram


def run_conditions(config: NodeConfig, mode: str, n_trials: int,
                   workers: int | None = None,
                   extra_storage_s: float = 0.0) -> ConditionRuns:
    """The three standard histograms: storage+retrieval, memory bypassed
    (pass-through pulse), and no input light (noise only)."""
    if mode == "solo":
        if extra_storage_s:
            raise ValueError("storage-time scans need triggered operation")
        run = lambda c: simulate.run_solo(config, c, n_trials, workers)
    elif mode == "source":
        run = lambda c: simulate.run_source(config, c, n_trials, workers,
                                            extra_storage_s)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ConditionRuns(
        memory=run("memory"), input=run("input"), no_input=run("no_input")
    )


@dataclass
class NodeMetrics:
    mode: str
    n_trials: int
    snr: float
    snr_lower_bound: bool
    storage_efficiency: float
    noise_floor_per_trial: float
    mean_photon_number: float | None = None
    snr_photon_normalized: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_trials": self.n_trials,
            "snr": self.snr,
            "snr_lower_bound": self.snr_lower_bound,
            "storage_efficiency": self.storage_efficiency,
            "noise_floor_per_trial": self.noise_floor_per_trial,
            "mean_photon_number": self.mean_photon_number,
            "snr_photon_normalized": self.snr_photon_normalized,
        }


def _metrics(config: NodeConfig, mode: str, runs: ConditionRuns,
             n_trials: int) -> NodeMetrics:
    a = config.analysis
    window = analysis.centered_window(
        runs.memory, a.signal_window_s, a.noise_window_start_s, a.noise_window_s
    )
    snr = analysis.extract_snr(runs.memory, window)

    full = analysis.centered_window(
        runs.memory, 2.0 * a.full_signal_halfwidth_s,
        a.noise_window_start_s, a.noise_window_s,
    )
    control_on = (config.timing.retrieve_at_s, config.timing.op_on_s)
    eff = analysis.internal_storage_efficiency(
        runs.memory, runs.input, full, noise_region_s=control_on
    )

    # flat background per trial, referred to the signal window width
    span = config.timing.op_on_s - config.timing.retrieve_at_s
    floor = runs.no_input.total() / n_trials * (a.signal_window_s / span)

    metrics = NodeMetrics(
        mode=mode,
        n_trials=n_trials,
        snr=snr.snr,
        snr_lower_bound=snr.lower_bound,
        storage_efficiency=eff,
        noise_floor_per_trial=floor,
    )
    if mode == "solo":
        nbar = analysis.mean_photon_number(
            runs.input,
            config.memory.filter_transmission * a.qst_transmission,
            config.detector_nir.efficiency,
            n_trials,
        )
        metrics.mean_photon_number = nbar
        metrics.snr_photon_normalized = snr.snr / nbar
    return metrics


def solo_metrics(config: NodeConfig, n_trials: int,
                 workers: int | None = None) -> tuple:
    """Clocked weak-coherent-pulse characterization.

    Returns (NodeMetrics, ConditionRuns); the metrics include the input
    photon number and the SNR normalized to one photon per pulse.
    """
    runs = run_conditions(config, "solo", n_trials, workers)
    return _metrics(config, "solo", runs, n_trials), runs


def source_metrics(config: NodeConfig, n_trials: int,
                   workers: int | None = None) -> tuple:
    """Heralded-photon characterization; n_trials counts telecom triggers."""
    runs = run_conditions(config, "source", n_trials, workers)
    return _metrics(config, "source", runs, n_trials), runs


def detection_window_sweep(config: NodeConfig, n_trials: int,
                           workers: int | None = None,
                           hist: Histogram | None = None) -> analysis.SweepResult:
    """Pair rate and fidelity vs detection-window size (triggered mode).

    The detected coincidence rate is referred back to generated pairs by the
    analyzer transmission, NIR detector efficiency and the unmeasured |VV>
    half of the coincidences.
    """
    if hist is None:
        hist = simulate.run_source(config, "memory", n_trials, workers)
    a = config.analysis
    return analysis.window_sweep(
        hist,
        a.noise_window_start_s,
        a.noise_window_s,
        a.sweep_windows_s,
        corrections={
            "qst": a.qst_transmission,
            "detector": config.detector_nir.efficiency,
            "vv_fraction": a.vv_fraction,
        },
        trial_rate_hz=config.source.telecom_rate_hz,
    )


@dataclass
class StorageScan:
    delays_s: np.ndarray
    efficiencies: np.ndarray
    fidelities: np.ndarray
    efficiency_fit: analysis.ExponentialFit
    utility: analysis.UtilityTime
    tomography_converged: bool

    def to_json_dict(self) -> dict:
        return {
            "delays_us": (self.delays_s * 1e6).tolist(),
            "efficiencies": self.efficiencies.tolist(),
            "fidelities": self.fidelities.tolist(),
            "tau_us": self.efficiency_fit.tau_s * 1e6,
            "tau_sigma_us": self.efficiency_fit.tau_sigma_s * 1e6,
            "utility_time_us": self.utility.time_s * 1e6,
            "utility_bounded": self.utility.bounded,
            "tomography_converged": self.tomography_converged,
        }

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("delay_us,efficiency,fidelity\n")
            for d, e, fi in zip(self.delays_s, self.efficiencies,
                                self.fidelities):
                f.write(f"{d * 1e6:.4f},{e:.6g},{fi:.6f}\n")


def storage_time_scan(
    config: NodeConfig,
    delays_s,
    n_trials: int,
    workers: int | None = None,
    duration_per_setting_s: float = 12.5,
    threshold: float = DISTILLATION_THRESHOLD,
) -> StorageScan:
    """Efficiency and reconstructed fidelity vs storage time.

    Each delay gets its own triggered memory/input runs (efficiency) and a
    full tomography pass (fidelity).  The efficiency decay is fit to a
    single exponential; the fidelity curve yields the utility time at the
    given threshold.
    """
    delays = np.sort(np.asarray(list(delays_s), dtype=float))
    if delays.size < 3:
        raise ValueError("need at least 3 storage delays")
    if delays[0] < 0:
        raise ValueError("storage delays must be >= 0")
    a = config.analysis
    effs, fids = [], []
    converged = True
    for d in delays:
        mem = simulate.run_source(config, "memory", n_trials, workers, d)
        inp = simulate.run_source(config, "input", n_trials, workers, d)
        full = analysis.centered_window(
            mem, 2.0 * a.full_signal_halfwidth_s,
            a.noise_window_start_s + d, a.noise_window_s,
        )
        span = config.timing.op_on_s - config.timing.retrieve_at_s
        region = (config.timing.retrieve_at_s + d,
                  config.timing.retrieve_at_s + d + span)
        effs.append(analysis.internal_storage_efficiency(
            mem, inp, full, noise_region_s=region
        ))
        counts = simulate.run_tomography(
            config, duration_per_setting_s=duration_per_setting_s,
            extra_storage_s=d,
        )
        result = tomography.mle_tomography(counts.counts, counts.settings)
        converged = converged and result.converged
        fids.append(result.fidelity_to_target)
    effs = np.asarray(effs)
    fids = np.asarray(fids)
    fit = analysis.fit_exponential(delays, effs)
    utility = analysis.utility_time(delays, fids, threshold)
    return StorageScan(
        delays_s=delays,
        efficiencies=effs,
        fidelities=fids,
        efficiency_fit=fit,
        utility=utility,
        tomography_converged=converged,
    )


def predicted_window_snr(config: NodeConfig, mode: str,
                         window_s: float | None = None,
                         extra_storage_s: float = 0.0) -> float:
    """Model SNR in a peak-centered window, no Monte Carlo."""
    a = config.analysis
    w = a.signal_window_s if window_s is None else window_s
    signal = simulate.detected_signal_probability(
        config, mode, extra_storage_s
    ) * simulate.window_capture(config, w)
    noise = simulate.noise_rate_hz(config) * w
    return signal / noise


def model_fidelity_curve(config: NodeConfig, times_s,
                         snr0: float | None = None) -> np.ndarray:
    """Werner-model fidelity vs storage time.

    The stored signal decays as exp(-t/tau) while the background stays
    flat, so the SNR inherits the efficiency decay directly.
    """
    if snr0 is None:
        snr0 = predicted_window_snr(config, "source")
    t = np.asarray(times_s, dtype=float)
    return np.array([
        fidelity_from_snr(snr0 * math.exp(-ti / config.memory.tau_coherence_s))
        for ti in t
    ])


def model_utility_time(config: NodeConfig,
                       threshold: float = DISTILLATION_THRESHOLD,
                       snr0: float | None = None) -> float:
    """Closed-form storage time at which the model fidelity hits a threshold."""
    if not 0.25 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0.25, 1), got {threshold}")
    if snr0 is None:
        snr0 = predicted_window_snr(config, "source")
    # invert F = 1 - 3 / (2 (snr + 2))
    snr_at = 1.5 / (1.0 - threshold) - 2.0
    if snr_at <= 0 or snr0 <= snr_at:
        return 0.0 if snr0 <= snr_at else math.inf
    return config.memory.tau_coherence_s * math.log(snr0 / snr_at)
