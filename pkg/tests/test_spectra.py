import numpy as np
import pytest

from vapornode import spectra
from vapornode.config import load_config
from vapornode.optics import CavitySpec


@pytest.fixture(scope="module")
def cfg():
    return load_config()


def test_absorption_feature_depth1_zeroes():
    feat = spectra.AbsorptionFeature(0.0, 0.5e9, 1.0)
    assert feat.attenuation(0.0) == pytest.approx(0.0, abs=1e-12)
    assert feat.attenuation(50e9) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError):
        spectra.AbsorptionFeature(0.0, 0.5e9, 1.5)
    with pytest.raises(ValueError):
        spectra.AbsorptionFeature(0.0, 0.5e9, 0.5, applies_to="other")


def test_pathway_model_invariants():
    with pytest.raises(ValueError):
        spectra.PathwaySpectrumModel((0.0, 1e9), (0.7, 0.7), 1e9)
    with pytest.raises(ValueError):
        spectra.PathwaySpectrumModel((0.0,), (1.0,), 1e9)


def test_pathway_center_is_local_max():
    pw = spectra.PathwaySpectrumModel((-2e9, 2e9), (0.5, 0.5), 0.8e9)
    model = spectra.JointSpectralModel(pathways=pw)
    d = np.linspace(-4e9, 4e9, 4001)
    s = spectra.telecom_spectrum(model, d)
    for c in (-2e9, 2e9):
        i = int(np.argmin(abs(d - c)))
        assert s[i] >= s[i - 5] and s[i] >= s[i + 5]


def test_telecom_spectrum_three_dips(cfg):
    model = cfg.spectral_model
    d = np.linspace(-3.5e9, 3.5e9, 7001)
    s = spectra.telecom_spectrum(model, d)
    minima = [
        d[i] for i in range(1, d.size - 1) if s[i] < s[i - 1] and s[i] < s[i + 1]
    ]
    assert len(minima) == 3
    for found, expected in zip(sorted(minima), (-1.7e9, 0.0, 2.0e9)):
        assert abs(found - expected) < 0.15e9


def test_pairing_map(cfg):
    model = cfg.spectral_model
    assert model.paired_nir_detuning(1.1e9) == pytest.approx(-0.7e9)
    # bijective: applying twice returns the input
    for d in (-2e9, 0.0, 1.1e9):
        assert model.paired_nir_detuning(
            model.paired_nir_detuning(d)
        ) == pytest.approx(d)


def test_heralding_lossless_limit():
    pw = spectra.PathwaySpectrumModel((-0.4e9, 0.4e9), (0.5, 0.5), 1.0e9)
    model = spectra.JointSpectralModel(pathways=pw, nir_baseline_survival=1.0)
    cav = CavitySpec(266e6, 15.2e9)
    for dc in (-1e9, 0.0, 1.1e9):
        eta, rate = spectra.heralding_vs_cavity_detuning(model, cav, dc)
        assert eta == pytest.approx(1.0, abs=1e-9)
        assert rate > 0


def test_heralding_dips_at_absorbing_partner():
    pw = spectra.PathwaySpectrumModel((-0.4e9, 0.4e9), (0.5, 0.5), 2.0e9)
    # depth-1 NIR dip at nir detuning 0 <-> telecom detuning 0.4 GHz
    feat = spectra.AbsorptionFeature(0.0, 0.4e9, 1.0, applies_to="nir_survival")
    model = spectra.JointSpectralModel(
        pathways=pw, features=(feat,), pairing_sum_hz=0.4e9
    )
    cav = CavitySpec(100e6, 15.2e9)
    eta_dip, _ = spectra.heralding_vs_cavity_detuning(model, cav, 0.4e9)
    eta_off, _ = spectra.heralding_vs_cavity_detuning(model, cav, 2.0e9)
    assert eta_dip < 0.1 * eta_off


def test_heralding_scale_invariance(cfg):
    class Scaled(spectra.PathwaySpectrumModel):
        def bare_spectrum(self, d):
            return 7.0 * super().bare_spectrum(d)

    base = cfg.spectral_model
    scaled_pw = Scaled(
        base.pathways.pathway_centers_hz,
        base.pathways.pathway_weights,
        base.pathways.doppler_fwhm_hz,
    )
    scaled = spectra.JointSpectralModel(
        pathways=scaled_pw,
        features=base.features,
        pairing_sum_hz=base.pairing_sum_hz,
        nir_baseline_survival=base.nir_baseline_survival,
    )
    cav = cfg.source.telecom_cavity
    for dc in (-1e9, 0.0, 1.1e9):
        eta0, rate0 = spectra.heralding_vs_cavity_detuning(base, cav, dc)
        eta7, rate7 = spectra.heralding_vs_cavity_detuning(scaled, cav, dc)
        assert abs(eta7 - eta0) < 1e-9
        assert rate7 == pytest.approx(7.0 * rate0, rel=1e-9)


def test_heralding_bounded(cfg):
    cav = cfg.source.telecom_cavity
    for dc in np.linspace(-3e9, 3e9, 41):
        eta, _ = spectra.heralding_vs_cavity_detuning(cfg.spectral_model, cav, dc)
        assert 0.0 <= eta <= 1.0


def test_memory_curve_two_peaks_one_zero(cfg):
    model = cfg.memory_acceptance
    c1, c2 = model.hyperfine_centers_hz
    d = np.linspace(-3e9, 3e9, 10001)
    e = spectra.memory_efficiency_vs_detuning(model, d)
    # normalization comes from an internal grid, so the peak is 1 up to
    # that grid's resolution
    assert (e >= 0).all() and e.max() == pytest.approx(1.0, abs=1e-4)
    maxima = [
        d[i] for i in range(1, d.size - 1) if e[i] > e[i - 1] and e[i] > e[i + 1]
    ]
    assert len(maxima) == 2
    # exactly one interior dark point between the hyperfine lines
    interior = (d > min(c1, c2)) & (d < max(c1, c2))
    a1, a2 = model.amplitudes
    d0 = (a1 * c2 - a2 * c1) / (a1 - a2)
    assert min(c1, c2) < d0 < max(c1, c2)
    assert model.raw_response(d0) < 1e-25 * model.raw_response(c1)
    assert e[interior].min() < 1e-6


def test_memory_curve_symmetric_case():
    model = spectra.MemoryAcceptanceModel((-1e9, 1e9), (1.0, -1.0), 0.5e9)
    d = np.linspace(-3e9, 3e9, 2001)
    e = spectra.memory_efficiency_vs_detuning(model, d)
    assert np.allclose(e, e[::-1], atol=1e-9)
    assert spectra.memory_efficiency_vs_detuning(model, 0.0) < 1e-12
    # vanishes far away
    assert spectra.memory_efficiency_vs_detuning(model, 1e12) < 1e-6


def test_select_operating_point_toy_single_pathway():
    pw = spectra.PathwaySpectrumModel((0.7e9, 0.7e9), (0.5, 0.5), 1.0e9)
    model = spectra.JointSpectralModel(pathways=pw)
    cav = CavitySpec(100e6, 15.2e9)
    # acceptance lines far away and a dark point at +100 GHz: effectively
    # flat over the scanned few-GHz band
    flat_memory = spectra.MemoryAcceptanceModel(
        (-100e9, 300e9), (1.0, -1.0), 500e9
    )
    best = spectra.select_operating_point(model, cav, flat_memory)
    assert abs(best - 0.7e9) < 0.05e9


def test_operating_point_beats_random_candidates(cfg):
    model, cav, mem = (
        cfg.spectral_model,
        cfg.source.telecom_cavity,
        cfg.memory_acceptance,
    )
    best = spectra.select_operating_point(model, cav, mem)
    best_score = spectra.operating_point_score(model, cav, mem, best)
    rng = np.random.default_rng(20250823)
    candidates = rng.uniform(-3.5e9, 3.5e9, 300)
    for dc in candidates:
        # slack covers the finite scan grid of select_operating_point
        assert spectra.operating_point_score(model, cav, mem, dc) <= (
            best_score * (1.0 + 1e-3)
        )


def test_operating_point_near_expected(cfg):
    best = spectra.select_operating_point(
        cfg.spectral_model, cfg.source.telecom_cavity, cfg.memory_acceptance
    )
    assert abs(best - 1.1e9) < 0.3e9
