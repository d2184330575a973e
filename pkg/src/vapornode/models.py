"""Parametric models of source, memory, detectors, and trigger timing,
plus the closed-form performance predictors built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .optics import CavitySpec

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))  # 1/2.3548


def _check_fraction(name: str, value: float, allow_zero: bool = False) -> None:
    lo_ok = value >= 0.0 if allow_zero else value > 0.0
    if not (lo_ok and value <= 1.0):
        raise ValueError(f"{name} must be a fraction in (0, 1], got {value}")


@dataclass(frozen=True)
class PulseMixture:
    """Retrieved-photon timing envelope: narrow core plus broad pedestal,
    both Gaussian, centered on the nominal retrieval time."""

    core_fwhm_s: float
    pedestal_fwhm_s: float
    core_fraction: float

    def __post_init__(self):
        if self.core_fwhm_s <= 0 or self.pedestal_fwhm_s <= 0:
            raise ValueError("pulse widths must be > 0")
        _check_fraction("core_fraction", self.core_fraction, allow_zero=True)


@dataclass(frozen=True)
class SourceParams:
    telecom_rate_hz: float
    heralding_eta: float
    werner_a: float
    telecom_cavity: CavitySpec
    input_pulse_fwhm_s: float

    def __post_init__(self):
        if self.telecom_rate_hz <= 0:
            raise ValueError("telecom_rate must be > 0")
        _check_fraction("heralding_eta", self.heralding_eta)
        if not 0.0 <= self.werner_a <= 1.0:
            raise ValueError(f"werner_a must be in [0, 1], got {self.werner_a}")
        if self.input_pulse_fwhm_s <= 0:
            raise ValueError("input_pulse_fwhm must be > 0")


@dataclass(frozen=True)
class MemoryParams:
    eta0_internal: float  # internal storage efficiency at first retrieval (solo)
    source_efficiency_ratio: float  # heralded-photon efficiency / solo efficiency
    tau_coherence_s: float
    retrieval_delay_s: float
    noise_per_trial: float  # noise probability per trial over the control-on span
    retrieved_pulse: PulseMixture
    control_rabi_peak_rad_s: float
    interface_transmission: float
    filter_transmission: float

    def __post_init__(self):
        _check_fraction("eta0_internal", self.eta0_internal)
        _check_fraction("source_efficiency_ratio", self.source_efficiency_ratio)
        _check_fraction("interface_transmission", self.interface_transmission)
        _check_fraction("filter_transmission", self.filter_transmission)
        if self.tau_coherence_s <= 0:
            raise ValueError("tau_coherence must be > 0")
        if not 0.0 <= self.noise_per_trial <= 1e-2:
            raise ValueError(
                f"noise_per_trial must be in [0, 1e-2], got {self.noise_per_trial}"
            )
        if self.retrieval_delay_s < 0:
            raise ValueError("retrieval_delay must be >= 0")
        if self.control_rabi_peak_rad_s <= 0:
            raise ValueError("control_rabi_peak must be > 0")

    @property
    def eta0_source(self) -> float:
        return self.eta0_internal * self.source_efficiency_ratio


@dataclass(frozen=True)
class DetectorParams:
    efficiency: float
    jitter_s: float  # quoted timing jitter
    label: str = "SPAD"
    jitter_convention: str = "fwhm"  # quoted value is FWHM (default) or sigma

    def __post_init__(self):
        _check_fraction("efficiency", self.efficiency)
        if self.jitter_s < 0:
            raise ValueError("jitter must be >= 0")
        if self.label not in ("SNSPD", "SPAD"):
            raise ValueError(f"detector label must be SNSPD or SPAD, got {self.label}")
        if self.jitter_convention not in ("fwhm", "sigma"):
            raise ValueError("jitter_convention must be 'fwhm' or 'sigma'")

    @property
    def jitter_sigma_s(self) -> float:
        if self.jitter_convention == "sigma":
            return self.jitter_s
        return self.jitter_s * FWHM_TO_SIGMA


@dataclass(frozen=True)
class TimingConfig:
    op_off_s: float
    write_pulse_len_s: float
    write_fall_s: float
    retrieve_at_s: float
    op_on_s: float
    clock_period_s: float
    tag_resolution_s: float
    bin_width_s: float

    def __post_init__(self):
        if not (self.op_off_s < 0.0 < self.retrieve_at_s < self.op_on_s < self.clock_period_s):
            raise ValueError(
                "timing must satisfy op_off < 0 < retrieve_at < op_on < clock_period"
            )
        if self.tag_resolution_s <= 0 or self.bin_width_s <= 0:
            raise ValueError("tag_resolution and bin_width must be > 0")


def storage_efficiency_at(mem: MemoryParams, t_s: float) -> float:
    """Internal storage efficiency after an extra storage time t beyond the
    first retrieval: eta0 * exp(-t / tau)."""
    if t_s < 0:
        raise ValueError(f"storage time must be >= 0, got {t_s}")
    return mem.eta0_internal * math.exp(-t_s / mem.tau_coherence_s)


def predict_source_snr(snr_n1: float, eta: float, efficiency_ratio: float = 1.0) -> float:
    """Triggered-operation SNR from the photon-number-normalized solo SNR:
    SNR = SNR_(n=1) * eta, times the storage-efficiency ratio between the
    two operating modes."""
    if snr_n1 <= 0 or eta <= 0 or efficiency_ratio <= 0:
        raise ValueError("all factors must be positive")
    return snr_n1 * eta * efficiency_ratio


def memory_bandwidth_from_control(
    mem: MemoryParams,
    reference_rabi_rad_s: float,
    reference_bandwidth_hz: float,
    exponent: float = 2.0,
) -> float:
    """Memory acceptance bandwidth scaling with control-field strength:
    B = B_ref * (Omega_c / Omega_ref)^exponent (quadratic by default,
    i.e. linear in control power)."""
    if reference_rabi_rad_s <= 0 or reference_bandwidth_hz <= 0:
        raise ValueError("reference values must be positive")
    ratio = mem.control_rabi_peak_rad_s / reference_rabi_rad_s
    return reference_bandwidth_hz * ratio**exponent


def end_to_end_detection_probability(
    src: SourceParams,
    mem: MemoryParams,
    det: DetectorParams,
    qst_transmission: float,
    window_capture: float,
    extra_storage_s: float = 0.0,
) -> float:
    """Probability per trigger of detecting the retrieved photon inside the
    detection window: eta * eta_storage * T_filter * T_qst * eta_det * capture."""
    _check_fraction("qst_transmission", qst_transmission)
    _check_fraction("window_capture", window_capture, allow_zero=True)
    eta_storage = (
        storage_efficiency_at(mem, extra_storage_s) * mem.source_efficiency_ratio
    )
    return (
        src.heralding_eta
        * eta_storage
        * mem.filter_transmission
        * qst_transmission
        * det.efficiency
        * window_capture
    )
