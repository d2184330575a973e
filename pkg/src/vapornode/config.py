"""Node configuration: loading, strict validation, hashing, round-trip.

The config file is YAML with explicit units in key names.  Unknown keys are
rejected with a field-path diagnostic; every sub-record's invariants are
checked at load time.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
import math
from dataclasses import dataclass

import yaml

from .models import (
    DetectorParams,
    MemoryParams,
    PulseMixture,
    SourceParams,
    TimingConfig,
)
from .optics import CavitySpec, FilterCascade
from .spectra import (
    AbsorptionFeature,
    JointSpectralModel,
    MemoryAcceptanceModel,
    PathwaySpectrumModel,
)

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Invalid configuration; message carries the offending field path."""


@dataclass(frozen=True)
class SoloParams:
    mean_photon_number: float
    input_pulse_fwhm_s: float

    def __post_init__(self):
        if self.mean_photon_number <= 0:
            raise ValueError("mean_photon_number must be > 0")
        if self.input_pulse_fwhm_s <= 0:
            raise ValueError("input_pulse_fwhm must be > 0")


@dataclass(frozen=True)
class AnalysisParams:
    qst_transmission: float
    vv_fraction: float
    signal_window_s: float
    noise_window_start_s: float
    noise_window_s: float
    full_signal_halfwidth_s: float
    tomography_window_s: float
    sweep_windows_s: tuple
    measured_filter_bandwidth_rad_s: float

    def __post_init__(self):
        for name in ("qst_transmission", "vv_fraction"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        for name in (
            "signal_window_s",
            "noise_window_s",
            "full_signal_halfwidth_s",
            "tomography_window_s",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not self.sweep_windows_s or any(w <= 0 for w in self.sweep_windows_s):
            raise ValueError("sweep windows must be positive")


@dataclass(frozen=True)
class NodeConfig:
    seed: int
    workers: int
    source: SourceParams
    memory: MemoryParams
    solo: SoloParams
    detector_telecom: DetectorParams
    detector_nir: DetectorParams
    timing: TimingConfig
    analysis: AnalysisParams
    filter_cascade: FilterCascade
    spectral_model: JointSpectralModel
    memory_acceptance: MemoryAcceptanceModel
    raw: dict  # the validated raw mapping, for hashing / round-trip

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form; stable under key reordering."""
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


class _Section:
    """Mapping view that tracks consumed keys and reports dotted paths."""

    def __init__(self, data, path=""):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping")
        self.data = data
        self.path = path
        self.seen = set()

    def _key(self, name):
        return f"{self.path}.{name}" if self.path else name

    def get(self, name, kind=None):
        if name not in self.data:
            raise ConfigError(f"missing required key: {self._key(name)}")
        self.seen.add(name)
        value = self.data[name]
        if kind is not None and not isinstance(value, kind):
            if kind is float and isinstance(value, int):
                return float(value)
            raise ConfigError(
                f"{self._key(name)}: expected {getattr(kind, '__name__', kind)}, "
                f"got {type(value).__name__}"
            )
        return value

    def section(self, name):
        return _Section(self.get(name), self._key(name))

    def finish(self):
        unknown = set(self.data) - self.seen
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"unknown key: {self._key(key)}")


def _cavity(sec: _Section) -> CavitySpec:
    cav = CavitySpec(
        fwhm_hz=sec.get("fwhm_mhz", float) * 1e6,
        fsr_hz=sec.get("fsr_ghz", float) * 1e9,
        center_detuning_hz=sec.get("center_detuning_ghz", float) * 1e9,
    )
    sec.finish()
    return cav


def _detector(sec: _Section) -> DetectorParams:
    det = DetectorParams(
        efficiency=sec.get("efficiency", float),
        jitter_s=sec.get("jitter_ps", float) * 1e-12,
        label=sec.get("label", str),
        jitter_convention=sec.get("jitter_convention", str),
    )
    sec.finish()
    return det


def _feature(entry, path) -> AbsorptionFeature:
    sec = _Section(entry, path)
    feat = AbsorptionFeature(
        center_hz=sec.get("center_ghz", float) * 1e9,
        width_hz=sec.get("width_ghz", float) * 1e9,
        depth=sec.get("depth", float),
        applies_to=sec.get("applies_to", str),
    )
    sec.finish()
    return feat


def parse_config(data: dict) -> NodeConfig:
    """Validate a raw mapping and build the typed config."""
    root = _Section(data)
    try:
        seed = root.get("seed", int)
        workers = root.get("workers", int)
        if workers < 1:
            raise ConfigError("workers: must be >= 1")

        src_sec = root.section("source")
        source = SourceParams(
            telecom_rate_hz=src_sec.get("telecom_rate_hz", float),
            heralding_eta=src_sec.get("heralding_eta", float),
            werner_a=src_sec.get("werner_a", float),
            input_pulse_fwhm_s=src_sec.get("input_pulse_fwhm_ns", float) * 1e-9,
            telecom_cavity=_cavity(src_sec.section("telecom_cavity")),
        )
        src_sec.finish()

        mem_sec = root.section("memory")
        pulse_sec = mem_sec.section("retrieved_pulse")
        pulse = PulseMixture(
            core_fwhm_s=pulse_sec.get("core_fwhm_ns", float) * 1e-9,
            pedestal_fwhm_s=pulse_sec.get("pedestal_fwhm_ns", float) * 1e-9,
            core_fraction=pulse_sec.get("core_fraction", float),
        )
        pulse_sec.finish()
        memory = MemoryParams(
            eta0_internal=mem_sec.get("eta0_internal", float),
            source_efficiency_ratio=mem_sec.get("source_efficiency_ratio", float),
            tau_coherence_s=mem_sec.get("tau_coherence_us", float) * 1e-6,
            retrieval_delay_s=mem_sec.get("retrieval_delay_ns", float) * 1e-9,
            noise_per_trial=mem_sec.get("noise_per_trial", float),
            retrieved_pulse=pulse,
            control_rabi_peak_rad_s=mem_sec.get("control_rabi_peak_mhz_2pi", float)
            * 1e6
            * TWO_PI,
            interface_transmission=mem_sec.get("interface_transmission", float),
            filter_transmission=mem_sec.get("filter_transmission", float),
        )
        mem_sec.finish()

        solo_sec = root.section("solo")
        solo = SoloParams(
            mean_photon_number=solo_sec.get("mean_photon_number", float),
            input_pulse_fwhm_s=solo_sec.get("input_pulse_fwhm_ns", float) * 1e-9,
        )
        solo_sec.finish()

        det_sec = root.section("detectors")
        det_telecom = _detector(det_sec.section("telecom"))
        det_nir = _detector(det_sec.section("nir"))
        det_sec.finish()

        t_sec = root.section("timing")
        timing = TimingConfig(
            op_off_s=t_sec.get("op_off_ns", float) * 1e-9,
            write_pulse_len_s=t_sec.get("write_pulse_len_ns", float) * 1e-9,
            write_fall_s=t_sec.get("write_fall_ns", float) * 1e-9,
            retrieve_at_s=t_sec.get("retrieve_at_ns", float) * 1e-9,
            op_on_s=t_sec.get("op_on_ns", float) * 1e-9,
            clock_period_s=t_sec.get("clock_period_us", float) * 1e-6,
            tag_resolution_s=t_sec.get("tag_resolution_ps", float) * 1e-12,
            bin_width_s=t_sec.get("bin_width_ps", float) * 1e-12,
        )
        t_sec.finish()

        a_sec = root.section("analysis")
        analysis = AnalysisParams(
            qst_transmission=a_sec.get("qst_transmission", float),
            vv_fraction=a_sec.get("vv_fraction", float),
            signal_window_s=a_sec.get("signal_window_ns", float) * 1e-9,
            noise_window_start_s=a_sec.get("noise_window_start_ns", float) * 1e-9,
            noise_window_s=a_sec.get("noise_window_ns", float) * 1e-9,
            full_signal_halfwidth_s=a_sec.get("full_signal_halfwidth_ns", float)
            * 1e-9,
            tomography_window_s=a_sec.get("tomography_window_ns", float) * 1e-9,
            sweep_windows_s=tuple(
                w * 1e-9 for w in a_sec.get("sweep_windows_ns", list)
            ),
            measured_filter_bandwidth_rad_s=a_sec.get(
                "measured_filter_bandwidth_mhz_2pi", float
            )
            * 1e6
            * TWO_PI,
        )
        a_sec.finish()

        f_sec = root.section("filter_cascade")
        stages = []
        for i, entry in enumerate(f_sec.get("stages", list)):
            s = _Section(entry, f"filter_cascade.stages[{i}]")
            stages.append(
                (
                    CavitySpec(
                        fwhm_hz=s.get("fwhm_ghz", float) * 1e9,
                        fsr_hz=s.get("fsr_ghz", float) * 1e9,
                    ),
                    s.get("passes", int),
                )
            )
            s.finish()
        cascade = FilterCascade(
            stages=tuple(stages),
            broadband_transmission=f_sec.get("broadband_transmission", float),
        )
        f_sec.finish()

        sp_sec = root.section("spectra")
        pathways = PathwaySpectrumModel(
            pathway_centers_hz=tuple(
                c * 1e9 for c in sp_sec.get("pathway_centers_ghz", list)
            ),
            pathway_weights=tuple(sp_sec.get("pathway_weights", list)),
            doppler_fwhm_hz=sp_sec.get("doppler_fwhm_ghz", float) * 1e9,
        )
        features = tuple(
            _feature(entry, f"spectra.features[{i}]")
            for i, entry in enumerate(sp_sec.get("features", list))
        )
        spectral_model = JointSpectralModel(
            pathways=pathways,
            features=features,
            pairing_sum_hz=sp_sec.get("pairing_sum_ghz", float) * 1e9,
            nir_baseline_survival=sp_sec.get("nir_baseline_survival", float),
        )
        ma_sec = sp_sec.section("memory_acceptance")
        acceptance = MemoryAcceptanceModel(
            hyperfine_centers_hz=tuple(
                c * 1e9 for c in ma_sec.get("hyperfine_centers_ghz", list)
            ),
            amplitudes=tuple(ma_sec.get("amplitudes", list)),
            linewidth_hz=ma_sec.get("linewidth_ghz", float) * 1e9,
        )
        ma_sec.finish()
        sp_sec.finish()

        root.finish()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return NodeConfig(
        seed=seed,
        workers=workers,
        source=source,
        memory=memory,
        solo=solo,
        detector_telecom=det_telecom,
        detector_nir=det_nir,
        timing=timing,
        analysis=analysis,
        filter_cascade=cascade,
        spectral_model=spectral_model,
        memory_acceptance=acceptance,
        raw=data,
    )


def load_config(path=None, overrides: dict | None = None) -> NodeConfig:
    """Load a YAML config file (the packaged defaults when path is None)."""
    if path is None:
        text = (
            importlib.resources.files("vapornode")
            .joinpath("defaults.yaml")
            .read_text()
        )
    else:
        with open(path) as f:
            text = f.read()
    data = yaml.safe_load(text)
    if overrides:
        data = {**data, **overrides}
    return parse_config(data)


def dump_config(config: NodeConfig, path) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(config.raw, f, sort_keys=True)
