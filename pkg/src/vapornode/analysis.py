"""Histogram-level analysis: SNR extraction, storage efficiency, photon
number, exponential fits, detection-window sweeps, and utility time."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .histograms import Histogram
from .states import fidelity_from_snr


@dataclass(frozen=True)
class WindowSpec:
    signal_start_s: float
    signal_width_s: float
    noise_start_s: float
    noise_width_s: float

    def __post_init__(self):
        if self.signal_width_s <= 0 or self.noise_width_s <= 0:
            raise ValueError("window widths must be > 0")
        s0, s1 = self.signal_start_s, self.signal_start_s + self.signal_width_s
        n0, n1 = self.noise_start_s, self.noise_start_s + self.noise_width_s
        if s0 < n1 and n0 < s1:
            raise ValueError("signal and noise windows must be disjoint")


def window_counts(hist: Histogram, start_s: float, width_s: float) -> float:
    """Counts inside [start, start+width), with fractional weighting of the
    bins straddling the edges."""
    lo, hi = hist.span_s
    if start_s < lo - 1e-15 or start_s + width_s > hi + 1e-15:
        raise ValueError("window extends outside the histogram span")
    edges = hist.bin_edges_s
    a = (np.clip(start_s + width_s, edges[:-1], edges[1:]) -
         np.clip(start_s, edges[:-1], edges[1:]))
    return float(np.sum(hist.counts * (a / hist.bin_width_s)))


def peak_time(hist: Histogram) -> float:
    """Center of the highest bin."""
    i = int(np.argmax(hist.counts))
    return hist.origin_s + (i + 0.5) * hist.bin_width_s


def centered_window(hist: Histogram, width_s: float, noise_start_s: float,
                    noise_width_s: float) -> WindowSpec:
    """Signal window of the given width centered on the histogram peak bin."""
    c = peak_time(hist)
    return WindowSpec(c - width_s / 2.0, width_s, noise_start_s, noise_width_s)


@dataclass
class SnrResult:
    snr: float
    signal_counts: float  # noise-subtracted counts in the signal window
    noise_rate_per_s: float  # accumulated counts per second of trial time
    lower_bound: bool = False  # True when the noise window was empty


def extract_snr(hist: Histogram, window: WindowSpec) -> SnrResult:
    """Signal-to-noise from a signal window and a (larger) noise window.

    The flat noise level is estimated from the noise window and subtracted
    from the signal-window counts; snr = net signal / expected noise in the
    signal window.  An empty noise window yields a lower bound (one
    count-equivalent noise floor) with a flag.
    """
    noise_counts = window_counts(hist, window.noise_start_s, window.noise_width_s)
    lower_bound = noise_counts == 0
    noise_rate = max(noise_counts, 1.0) / window.noise_width_s
    raw = window_counts(hist, window.signal_start_s, window.signal_width_s)
    expected_noise = noise_rate * window.signal_width_s
    signal = raw - expected_noise
    return SnrResult(
        snr=signal / expected_noise,
        signal_counts=signal,
        noise_rate_per_s=noise_rate,
        lower_bound=lower_bound,
    )


def internal_storage_efficiency(
    hist_memory: Histogram,
    hist_input: Histogram,
    window: WindowSpec,
    transmissions: float = 1.0,
    noise_region_s: tuple | None = None,
) -> float:
    """Retrieved photons (noise-subtracted, full retrieval window) over
    input photons, both per trial.

    transmissions is the ratio of retrieved-path to input-path optical
    transmission (1 when both traverse the same chain).  noise_region_s
    optionally bounds the span where the flat background exists (the
    control-on interval); the subtraction then covers only the overlap with
    the signal window instead of its full width.
    """
    if hist_memory.n_trials < 1 or hist_input.n_trials < 1:
        raise ValueError("histograms must carry their trial counts")
    input_counts = float(hist_input.counts.sum())
    if input_counts <= 0:
        raise ValueError("input histogram has no counts")
    noise_counts = window_counts(
        hist_memory, window.noise_start_s, window.noise_width_s
    )
    noise_rate = noise_counts / window.noise_width_s
    raw = window_counts(hist_memory, window.signal_start_s, window.signal_width_s)
    if noise_region_s is None:
        overlap = window.signal_width_s
    else:
        overlap = max(
            0.0,
            min(window.signal_start_s + window.signal_width_s, noise_region_s[1])
            - max(window.signal_start_s, noise_region_s[0]),
        )
    retrieved_per_trial = (raw - noise_rate * overlap) / hist_memory.n_trials
    input_per_trial = input_counts / hist_input.n_trials
    return retrieved_per_trial / (input_per_trial * transmissions)


def mean_photon_number(
    hist_input: Histogram,
    transmissions: float,
    detector_efficiency: float,
    n_trials: int,
) -> float:
    """Input photon number per trial, backtracked through the pass-through
    transmission and the detector efficiency."""
    for name, v in (("transmissions", transmissions),
                    ("detector_efficiency", detector_efficiency)):
        if not 0.0 < v <= 1.0:
            raise ValueError(f"{name} must be in (0, 1], got {v}")
    return float(hist_input.counts.sum()) / (
        n_trials * transmissions * detector_efficiency
    )


@dataclass
class ExponentialFit:
    amplitude: float
    tau_s: float
    tau_sigma_s: float
    covariance: np.ndarray
    non_decaying: bool = False
    excluded_points: int = 0


def fit_exponential(t, y, sigma=None) -> ExponentialFit:
    """Fit y = A exp(-t/tau) by weighted least squares on log y, refined with
    a direct nonlinear fit.  Non-positive y points are excluded with a count.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size != y.size:
        raise ValueError("t and y length mismatch")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t must be strictly increasing")
    sig = None if sigma is None else np.asarray(sigma, dtype=float)
    keep = y > 0
    excluded = int((~keep).sum())
    t, y = t[keep], y[keep]
    if sig is not None:
        sig = sig[keep]
    if t.size < 3:
        raise ValueError("need at least 3 usable points")

    wts = 1.0 / (sig / y) ** 2 if sig is not None else np.ones_like(y)
    # weighted linear fit of log y = log A - t/tau
    sw = wts.sum()
    tm = (wts * t).sum() / sw
    lm = (wts * np.log(y)).sum() / sw
    denom = (wts * (t - tm) ** 2).sum()
    slope = (wts * (t - tm) * (np.log(y) - lm)).sum() / denom
    if slope >= 0:
        return ExponentialFit(
            amplitude=float(np.exp(lm)),
            tau_s=math.inf,
            tau_sigma_s=math.inf,
            covariance=np.full((2, 2), np.nan),
            non_decaying=True,
            excluded_points=excluded,
        )
    a0, tau0 = float(np.exp(lm + slope * tm)), -1.0 / slope

    def model(tt, a, tau):
        return a * np.exp(-tt / tau)

    popt, pcov = curve_fit(
        model, t, y, p0=(a0, tau0), sigma=sig, absolute_sigma=sig is not None,
        maxfev=10000,
    )
    return ExponentialFit(
        amplitude=float(popt[0]),
        tau_s=float(popt[1]),
        tau_sigma_s=float(np.sqrt(pcov[1, 1])),
        covariance=pcov,
        excluded_points=excluded,
    )


@dataclass
class SweepResult:
    window_sizes_s: np.ndarray
    rates_pairs_per_s: np.ndarray
    fidelities: np.ndarray
    per_trial_success: np.ndarray
    snrs: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("window_ns,rate_pairs_per_s,fidelity,per_trial\n")
            for w, r, fi, p in zip(
                self.window_sizes_s, self.rates_pairs_per_s,
                self.fidelities, self.per_trial_success,
            ):
                f.write(f"{w * 1e9:.4f},{r:.6g},{fi:.6f},{p:.6g}\n")


def window_sweep(
    hist_signal: Histogram,
    noise_window_start_s: float,
    noise_window_s: float,
    window_sizes_s,
    corrections: dict,
    trial_rate_hz: float,
) -> SweepResult:
    """Rate and predicted fidelity vs detection-window size.

    Each window is centered on the histogram peak.  The pair rate counts
    every detection in the window (the noise ones degrade fidelity, not the
    rate) corrected for analyzer transmission, detector efficiency, and the
    undetected |VV> fraction; the fidelity comes from the noise-subtracted
    SNR through the Werner model.
    """
    for key in ("qst", "detector", "vv_fraction"):
        if key not in corrections or not 0.0 < corrections[key] <= 1.0:
            raise ValueError(f"correction {key!r} must be in (0, 1]")
    if hist_signal.n_trials < 1:
        raise ValueError("histogram must carry its trial count")
    correction = (
        corrections["qst"] * corrections["detector"] * corrections["vv_fraction"]
    )
    windows = np.sort(np.asarray(list(window_sizes_s), dtype=float))
    rates, fids, per_trial, snrs = [], [], [], []
    for w in windows:
        spec = centered_window(hist_signal, w, noise_window_start_s, noise_window_s)
        res = extract_snr(hist_signal, spec)
        captured = window_counts(hist_signal, spec.signal_start_s, w)
        pt = captured / hist_signal.n_trials
        per_trial.append(pt)
        rates.append(pt * trial_rate_hz / correction)
        snrs.append(res.snr)
        fids.append(fidelity_from_snr(max(res.snr, 0.0)))
    return SweepResult(
        window_sizes_s=windows,
        rates_pairs_per_s=np.asarray(rates),
        fidelities=np.asarray(fids),
        per_trial_success=np.asarray(per_trial),
        snrs=np.asarray(snrs),
    )


def _isotonic_non_increasing(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators fit of a non-increasing sequence."""
    vals = list(y.astype(float))
    wts = [1.0] * len(vals)
    out_v, out_w = [], []
    for v, w in zip(vals, wts):
        out_v.append(v)
        out_w.append(w)
        while len(out_v) > 1 and out_v[-2] < out_v[-1]:
            v2, w2 = out_v.pop(), out_w.pop()
            v1, w1 = out_v.pop(), out_w.pop()
            out_v.append((v1 * w1 + v2 * w2) / (w1 + w2))
            out_w.append(w1 + w2)
    fitted = np.empty(len(vals))
    i = 0
    for v, w in zip(out_v, out_w):
        fitted[i : i + int(w)] = v
        i += int(w)
    return fitted


@dataclass
class UtilityTime:
    time_s: float
    bounded: bool  # False when the curve never crosses the threshold


def utility_time(times_s, fidelities, threshold: float) -> UtilityTime:
    """First crossing of the (isotonically smoothed) fidelity curve below a
    threshold, by linear interpolation."""
    if not 0.25 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0.25, 1), got {threshold}")
    t = np.asarray(times_s, dtype=float)
    f = _isotonic_non_increasing(np.asarray(fidelities, dtype=float))
    if f[0] <= threshold:
        return UtilityTime(time_s=float(t[0]) if f[0] < threshold else float(t[0]),
                           bounded=True)
    below = np.nonzero(f <= threshold)[0]
    if below.size == 0:
        return UtilityTime(time_s=float(t[-1]), bounded=False)
    i = below[0]
    frac = (f[i - 1] - threshold) / (f[i - 1] - f[i])
    return UtilityTime(time_s=float(t[i - 1] + frac * (t[i] - t[i - 1])),
                       bounded=True)
