"""Monte Carlo generation of time-tagged detection events.

Reproducibility scheme: trials are split into fixed-size blocks; block b of
condition c uses Generator(Philox(key=(seed, c)).jumped(b)).  A trial's
randomness therefore depends only on (seed, condition, trial index), so the
event stream is bit-identical for any worker count, and histograms merge by
commutative integer addition.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import states
from .config import NodeConfig
from .histograms import Histogram
from .models import FWHM_TO_SIGMA

BLOCK_SIZE = 1 << 16

# condition stream ids
_COND_IDS = {"memory": 0, "input": 1, "no_input": 2, "tomography": 3}

CONDITIONS = ("memory", "input", "no_input")


@dataclass(frozen=True)
class RunSpec:
    """Everything one block of trials needs; cheap to pickle."""

    p_signal: float  # detection probability per trial (full pulse)
    signal_center_s: float
    # (sigma_s, fraction) mixture components of the timing envelope
    signal_sigmas_s: tuple
    signal_fractions: tuple
    jitter_sigma_s: float
    noise_lambda: float  # expected noise counts per trial
    noise_start_s: float
    noise_end_s: float
    frame_origin_s: float
    frame_end_s: float
    tag_resolution_s: float
    bin_width_s: float
    trial_period_s: float  # fixed clock period, or 0 for Poisson triggers
    trigger_rate_hz: float = 0.0

    @property
    def n_bins(self) -> int:
        return int(
            math.ceil((self.frame_end_s - self.frame_origin_s) / self.bin_width_s)
        )


def _block_rng(seed: int, condition_id: int, block_index: int) -> np.random.Generator:
    bitgen = np.random.Philox(key=(seed & (2**64 - 1), condition_id))
    return np.random.Generator(bitgen.jumped(block_index))


def _simulate_block(spec: RunSpec, seed, condition_id, block_index, n):
    """One block of trials -> (timestamps in tag units, trial indices, duration)."""
    rng = _block_rng(seed, condition_id, block_index)

    if spec.trial_period_s > 0:
        duration = n * spec.trial_period_s
    else:
        duration = float(rng.exponential(1.0 / spec.trigger_rate_hz, n).sum())

    # signal photon: detected or not, then its timestamp
    u_sig = rng.random(n)
    comp = rng.random(n)
    z_env = rng.standard_normal(n)
    z_jit = rng.standard_normal(n)
    detected = u_sig < spec.p_signal
    sigma = np.full(n, spec.signal_sigmas_s[-1])
    acc = 0.0
    for s, frac in zip(spec.signal_sigmas_s[:-1], spec.signal_fractions[:-1]):
        sigma[(comp >= acc) & (comp < acc + frac)] = s
        acc += frac
    t_sig = (
        spec.signal_center_s
        + z_env * sigma
        + z_jit * spec.jitter_sigma_s
    )[detected]
    idx_sig = np.nonzero(detected)[0]

    # noise counts, uniform over the control-on span
    if spec.noise_lambda > 0:
        k = rng.poisson(spec.noise_lambda, n)
        total = int(k.sum())
        t_noise = spec.noise_start_s + rng.random(total) * (
            spec.noise_end_s - spec.noise_start_s
        )
        idx_noise = np.repeat(np.arange(n), k)
    else:
        t_noise = np.empty(0)
        idx_noise = np.empty(0, dtype=np.int64)

    t = np.concatenate([t_sig, t_noise])
    idx = np.concatenate([idx_sig, idx_noise]) + block_index * BLOCK_SIZE
    tags = np.rint(t / spec.tag_resolution_s).astype(np.int64)

    lo = int(math.ceil(spec.frame_origin_s / spec.tag_resolution_s))
    hi = int(math.floor(spec.frame_end_s / spec.tag_resolution_s))
    keep = (tags >= lo) & (tags < hi)
    order = np.argsort(idx[keep], kind="stable")
    return tags[keep][order], idx[keep][order], duration


def _block_worker(args):
    spec, seed, condition_id, block_index, n = args
    tags, idx, duration = _simulate_block(spec, seed, condition_id, block_index, n)
    counts = _bin_tags(spec, tags)
    return counts, duration


def _bin_tags(spec: RunSpec, tags: np.ndarray) -> np.ndarray:
    t = tags * spec.tag_resolution_s - spec.frame_origin_s
    bins = (t / spec.bin_width_s).astype(np.int64)
    return np.bincount(bins, minlength=spec.n_bins)[: spec.n_bins]


def _blocks(n_trials: int):
    full, rem = divmod(n_trials, BLOCK_SIZE)
    sizes = [BLOCK_SIZE] * full + ([rem] if rem else [])
    return list(enumerate(sizes))


def run_condition(
    spec: RunSpec, seed: int, condition_id: int, n_trials: int, workers: int = 1
) -> Histogram:
    """Simulate n_trials and return the merged histogram."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    jobs = [(spec, seed, condition_id, b, n) for b, n in _blocks(n_trials)]
    if workers <= 1 or len(jobs) == 1:
        results = [_block_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_block_worker, jobs, chunksize=1))
    counts = np.zeros(spec.n_bins, dtype=np.int64)
    duration = 0.0
    for c, d in results:
        counts += c
        duration += d
    return Histogram(
        spec.bin_width_s, counts, spec.frame_origin_s, duration, n_trials
    )


def run_events(spec: RunSpec, seed: int, condition_id: int, n_trials: int):
    """Event-level output: (trial_index, timestamp in tag units) arrays."""
    all_tags, all_idx = [], []
    for b, n in _blocks(n_trials):
        tags, idx, _ = _simulate_block(spec, seed, condition_id, b, n)
        all_tags.append(tags)
        all_idx.append(idx)
    return np.concatenate(all_idx), np.concatenate(all_tags)


def envelope_components(config: NodeConfig):
    """(sigmas, fractions) of the retrieved-photon timing mixture."""
    pulse = config.memory.retrieved_pulse
    return (
        (pulse.core_fwhm_s * FWHM_TO_SIGMA, pulse.pedestal_fwhm_s * FWHM_TO_SIGMA),
        (pulse.core_fraction, 1.0 - pulse.core_fraction),
    )


def window_capture(config: NodeConfig, window_s: float) -> float:
    """Fraction of the retrieved pulse (jitter included) inside a window
    centered on the pulse peak."""
    sigmas, fractions = envelope_components(config)
    jit = config.detector_nir.jitter_sigma_s
    cap = 0.0
    for s, frac in zip(sigmas, fractions):
        s_eff = math.sqrt(s**2 + jit**2)
        cap += frac * math.erf(window_s / (2.0 * math.sqrt(2.0) * s_eff))
    return cap


def detected_signal_probability(config: NodeConfig, mode: str,
                                extra_storage_s: float = 0.0) -> float:
    """Full-pulse detection probability per trial for the memory condition."""
    mem = config.memory
    if mode == "solo":
        amp = config.solo.mean_photon_number
        eta = mem.eta0_internal
    elif mode == "source":
        amp = config.source.heralding_eta
        eta = mem.eta0_source
    else:
        raise ValueError(f"unknown mode {mode!r}")
    eta *= math.exp(-extra_storage_s / mem.tau_coherence_s)
    return (
        amp
        * eta
        * mem.filter_transmission
        * config.analysis.qst_transmission
        * config.detector_nir.efficiency
    )


def passthrough_probability(config: NodeConfig, mode: str) -> float:
    """Detection probability per trial for the input condition (vapor
    removed, control and OP blocked)."""
    amp = (
        config.solo.mean_photon_number
        if mode == "solo"
        else config.source.heralding_eta
    )
    return (
        amp
        * config.memory.filter_transmission
        * config.analysis.qst_transmission
        * config.detector_nir.efficiency
    )


def noise_rate_hz(config: NodeConfig) -> float:
    """Noise detection rate per trial while the control field is on."""
    span = config.timing.op_on_s - config.timing.retrieve_at_s
    return config.memory.noise_per_trial / span


def build_spec(
    config: NodeConfig,
    mode: str,
    condition: str,
    extra_storage_s: float = 0.0,
) -> RunSpec:
    """RunSpec for one (mode, condition) pair.

    extra_storage_s delays the retrieval beyond the nominal retrieve_at and
    scales the storage efficiency by exp(-t/tau).
    """
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}")
    t = config.timing
    mem = config.memory
    retrieve_at = t.retrieve_at_s + extra_storage_s
    noise_span = t.op_on_s - t.retrieve_at_s  # control-on duration is fixed
    noise_start, noise_end = retrieve_at, retrieve_at + noise_span
    frame_end = min(noise_end + 30e-9, t.clock_period_s)
    sigmas, fractions = envelope_components(config)

    if condition == "memory":
        p = detected_signal_probability(config, mode, extra_storage_s)
        center = retrieve_at + mem.retrieval_delay_s
        lam = mem.noise_per_trial
    elif condition == "input":
        p = passthrough_probability(config, mode)
        fwhm = (
            config.solo.input_pulse_fwhm_s
            if mode == "solo"
            else config.source.input_pulse_fwhm_s
        )
        sigmas, fractions = (fwhm * FWHM_TO_SIGMA,), (1.0,)
        center = 0.0
        lam = 0.0
    else:  # no_input
        p = 0.0
        center = retrieve_at
        lam = mem.noise_per_trial

    if mode == "solo":
        period, rate = t.clock_period_s, 0.0
    else:
        period, rate = 0.0, config.source.telecom_rate_hz

    return RunSpec(
        p_signal=p,
        signal_center_s=center,
        signal_sigmas_s=sigmas,
        signal_fractions=fractions,
        jitter_sigma_s=config.detector_nir.jitter_sigma_s,
        noise_lambda=lam,
        noise_start_s=noise_start,
        noise_end_s=noise_end,
        frame_origin_s=t.op_off_s,
        frame_end_s=max(frame_end, noise_end + 10e-9),
        tag_resolution_s=t.tag_resolution_s,
        bin_width_s=t.bin_width_s,
        trial_period_s=period,
        trigger_rate_hz=rate,
    )


def run_solo(config: NodeConfig, condition: str, n_trials: int,
             workers: int | None = None) -> Histogram:
    """Clocked weak-coherent-pulse operation under one of the three
    experimental conditions (memory / input / no_input)."""
    spec = build_spec(config, "solo", condition)
    w = config.workers if workers is None else workers
    return run_condition(spec, config.seed, _COND_IDS[condition], n_trials, w)


def run_source(config: NodeConfig, condition: str, n_trials: int,
               workers: int | None = None,
               extra_storage_s: float = 0.0) -> Histogram:
    """Triggered operation: each trial is the detection of a telecom photon;
    the histogram axis is time since trigger."""
    spec = build_spec(config, "source", condition, extra_storage_s)
    w = config.workers if workers is None else workers
    # offset the block stream so different storage delays are independent
    cond = _COND_IDS[condition] + 16 * (1 + int(round(extra_storage_s * 1e12)) % (2**40))
    return run_condition(spec, config.seed, cond, n_trials, w)


@dataclass
class TomographyCounts:
    settings: list
    counts: np.ndarray
    live_time_s: float
    triggers_per_setting: np.ndarray
    informationally_complete: bool


def _settings_complete(settings) -> bool:
    vecs = np.stack([s.joint().reshape(-1) for s in settings])
    return np.linalg.matrix_rank(vecs, tol=1e-9) == 16


def run_tomography(
    config: NodeConfig,
    settings=None,
    duration_per_setting_s: float = 12.5,
    extra_storage_s: float = 0.0,
) -> TomographyCounts:
    """Coincidence counts for each polarization setting.

    Per trigger that passed the telecom projector, the NIR outcome is drawn
    from the Born-rule probability of the configured source state, with the
    flat noise floor adding projector-independent coincidences inside the
    detection window.
    """
    if settings is None:
        settings = states.tomography_settings()
    rho = states.werner_state(config.source.werner_a)
    w = config.analysis.tomography_window_s
    p_chain = detected_signal_probability(config, "source", extra_storage_s)
    p_window = p_chain * window_capture(config, w)
    p_noise = noise_rate_hz(config) * w

    delay_key = int(round(extra_storage_s * 1e12)) % (2**40)
    rng = np.random.Generator(
        np.random.Philox(key=(config.seed & (2**64 - 1), _COND_IDS["tomography"]))
        .jumped(delay_key)
    )
    counts = np.zeros(len(settings), dtype=np.int64)
    triggers = np.zeros(len(settings), dtype=np.int64)
    for i, setting in enumerate(settings):
        # trigger rate through the telecom projector
        p_trig = float(
            np.real(np.trace(np.kron(setting.projector_a, np.eye(2)) @ rho))
        )
        n_trig = rng.poisson(
            config.source.telecom_rate_hz * duration_per_setting_s * p_trig
        )
        if p_trig <= 0:
            continue
        born = states.outcome_probability(rho, setting) / p_trig
        p_coinc = born * p_window + p_noise
        counts[i] = rng.binomial(n_trig, min(p_coinc, 1.0))
        triggers[i] = n_trig
    return TomographyCounts(
        settings=list(settings),
        counts=counts,
        live_time_s=duration_per_setting_s * len(settings),
        triggers_per_setting=triggers,
        informationally_complete=_settings_complete(settings),
    )


def write_event_dump(path, trial_idx, tags, condition: str,
                     tag_resolution_s: float) -> None:
    """Line format: trial_index<TAB>condition<TAB>timestamp_ps."""
    ps_per_tag = tag_resolution_s / 1e-12
    with open(path, "w") as f:
        for i, tag in zip(trial_idx, tags):
            f.write(f"{int(i)}\t{condition}\t{int(round(tag * ps_per_tag))}\n")
