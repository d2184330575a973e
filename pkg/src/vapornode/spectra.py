"""Source photon spectra, absorption notches, heralding efficiency vs
cavity detuning, and the two-peak memory acceptance curve.

Line shapes are phenomenological: Gaussian (Doppler-dominated) pathway
profiles with multiplicative Gaussian notches.  Telecom detunings are
quoted relative to the mid-point of the two intermediate-state pathways;
NIR detunings relative to the mid-point of the two hyperfine lines on the
NIR side.  Energy conservation pairs a telecom detuning d_T with the NIR
detuning d_N = pairing_sum - d_T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .optics import CavitySpec, cavity_transmission


@dataclass(frozen=True)
class AbsorptionFeature:
    """Multiplicative Gaussian notch: transmission 1 - depth * g(d)."""

    center_hz: float
    width_hz: float  # FWHM
    depth: float
    applies_to: str = "telecom_rate"  # or "nir_survival"

    def __post_init__(self):
        if not 0.0 <= self.depth <= 1.0:
            raise ValueError(f"depth must be in [0, 1], got {self.depth}")
        if self.width_hz <= 0:
            raise ValueError("width must be > 0")
        if self.applies_to not in ("telecom_rate", "nir_survival"):
            raise ValueError(f"unknown applies_to {self.applies_to!r}")

    def attenuation(self, detuning_hz):
        d = np.asarray(detuning_hz, dtype=float) - self.center_hz
        sigma = self.width_hz / math.sqrt(8.0 * math.log(2.0))
        return 1.0 - self.depth * np.exp(-(d**2) / (2.0 * sigma**2))


@dataclass(frozen=True)
class PathwaySpectrumModel:
    """Two Doppler-broadened decay pathways via the intermediate states."""

    pathway_centers_hz: tuple  # (lower, upper)
    pathway_weights: tuple
    doppler_fwhm_hz: float

    def __post_init__(self):
        if len(self.pathway_centers_hz) != 2 or len(self.pathway_weights) != 2:
            raise ValueError("exactly two pathways expected")
        w1, w2 = self.pathway_weights
        if w1 < 0 or w2 < 0 or abs(w1 + w2 - 1.0) > 1e-9:
            raise ValueError("pathway weights must be non-negative and sum to 1")
        if self.doppler_fwhm_hz <= 0:
            raise ValueError("doppler width must be > 0")

    def bare_spectrum(self, detuning_hz):
        d = np.asarray(detuning_hz, dtype=float)
        sigma = self.doppler_fwhm_hz / math.sqrt(8.0 * math.log(2.0))
        s = 0.0
        for c, w in zip(self.pathway_centers_hz, self.pathway_weights):
            s = s + w * np.exp(-((d - c) ** 2) / (2.0 * sigma**2))
        return s


@dataclass(frozen=True)
class JointSpectralModel:
    """Telecom spectrum, absorption features, and the telecom<->NIR pairing."""

    pathways: PathwaySpectrumModel
    features: tuple = ()
    pairing_sum_hz: float = 0.0
    nir_baseline_survival: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.nir_baseline_survival <= 1.0:
            raise ValueError("nir_baseline_survival must be in (0, 1]")

    def paired_nir_detuning(self, telecom_detuning_hz):
        return self.pairing_sum_hz - np.asarray(telecom_detuning_hz, dtype=float)

    def nir_survival(self, nir_detuning_hz):
        s = np.asarray(nir_detuning_hz, dtype=float) * 0.0 + self.nir_baseline_survival
        for feat in self.features:
            if feat.applies_to == "nir_survival":
                s = s * feat.attenuation(nir_detuning_hz)
        return s


def telecom_spectrum(model: JointSpectralModel, detuning_hz):
    """Relative telecom photon rate vs detuning: pathway profiles times the
    telecom-side notches."""
    s = model.pathways.bare_spectrum(detuning_hz)
    for feat in model.features:
        if feat.applies_to == "telecom_rate":
            s = s * feat.attenuation(detuning_hz)
    return s


def heralding_vs_cavity_detuning(
    model: JointSpectralModel,
    cavity: CavitySpec,
    cavity_detuning_hz: float,
    band_hz: float = 8e9,
    n_grid: int = 4001,
    passes: int = 2,
):
    """(heralding efficiency, relative rate) for one cavity position.

    rate = integral of T_cav(nu - d_c)^passes s_tel(nu); the efficiency
    weights the same integrand with the survival of the paired NIR photon.
    The heralding filter is double-passed by default, which tames the
    Lorentzian tails that would otherwise wash out the survival structure.
    """
    nu = np.linspace(-band_hz / 2.0, band_hz / 2.0, n_grid)
    # cavity_detuning_hz is the absolute cavity position; ignore any center
    # baked into the spec so scans do not double-shift
    recentered = replace(cavity, center_detuning_hz=0.0)
    t = cavity_transmission(recentered, nu - cavity_detuning_hz) ** passes
    s = telecom_spectrum(model, nu)
    rate = float(np.trapezoid(t * s, nu))
    if rate <= 1e-30 * float(np.trapezoid(s, nu)):
        raise ValueError("rate below numeric floor; heralding efficiency undefined")
    surv = model.nir_survival(model.paired_nir_detuning(nu))
    eta = float(np.trapezoid(t * s * surv, nu)) / rate
    return min(max(eta, 0.0), 1.0), rate


@dataclass(frozen=True)
class MemoryAcceptanceModel:
    """Two interfering hyperfine pathways; efficiency has two peaks and one
    interior zero for opposite-sign amplitudes."""

    hyperfine_centers_hz: tuple
    amplitudes: tuple  # signed (or complex) weights
    linewidth_hz: float

    def __post_init__(self):
        if len(self.hyperfine_centers_hz) != 2 or len(self.amplitudes) != 2:
            raise ValueError("exactly two hyperfine pathways expected")
        if self.linewidth_hz <= 0:
            raise ValueError("linewidth must be > 0")

    def raw_response(self, detuning_hz):
        """|a1 (d - c2) - a2 (d - c1)|^2 / (|d - c1 + iG/2|^2 |d - c2 + iG/2|^2).

        Two damped resonances a1/(d-c1) - a2/(d-c2) with the pole damping
        kept only in the denominator; opposite-sign amplitudes interfere
        destructively between the lines, giving an exact dark point at
        d0 = (a1 c2 - a2 c1) / (a1 - a2).
        """
        d = np.asarray(detuning_hz, dtype=float)
        g = self.linewidth_hz / 2.0
        c1, c2 = self.hyperfine_centers_hz
        a1, a2 = self.amplitudes
        num = np.abs(a1 * (d - c2) - a2 * (d - c1)) ** 2
        den = (np.abs(d - c1 + 1j * g) ** 2) * (np.abs(d - c2 + 1j * g) ** 2)
        return num / den


def memory_efficiency_vs_detuning(model: MemoryAcceptanceModel, detuning_hz):
    """Relative storage efficiency, normalized to unit peak over the band
    spanning both hyperfine lines."""
    span = 6.0 * (
        abs(model.hyperfine_centers_hz[1] - model.hyperfine_centers_hz[0])
        + model.linewidth_hz
    )
    grid = np.linspace(-span, span, 8001)
    peak = model.raw_response(grid).max()
    out = model.raw_response(detuning_hz) / peak
    return out if np.ndim(detuning_hz) else float(out)


def select_operating_point(
    model: JointSpectralModel,
    cavity: CavitySpec,
    memory_model: MemoryAcceptanceModel,
    scan_band_hz: float = 7e9,
    n_scan: int = 701,
) -> float:
    """Cavity detuning maximizing eta * rate * memory acceptance at the
    paired NIR detuning.  Ties break toward smaller |detuning|."""
    candidates = np.linspace(-scan_band_hz / 2.0, scan_band_hz / 2.0, n_scan)
    best = None
    for dc in sorted(candidates, key=abs):
        try:
            eta, rate = heralding_vs_cavity_detuning(model, cavity, dc)
        except ValueError:
            continue
        mem = memory_efficiency_vs_detuning(
            memory_model, model.paired_nir_detuning(dc)
        )
        score = eta * rate * mem
        if best is None or score > best[0] * (1.0 + 1e-12):
            best = (score, dc)
    if best is None:
        raise ValueError("no feasible operating point in the scanned band")
    return best[1]


def operating_point_score(model, cavity, memory_model, cavity_detuning_hz) -> float:
    eta, rate = heralding_vs_cavity_detuning(model, cavity, cavity_detuning_hz)
    mem = memory_efficiency_vs_detuning(
        memory_model, model.paired_nir_detuning(cavity_detuning_hz)
    )
    return eta * rate * mem
