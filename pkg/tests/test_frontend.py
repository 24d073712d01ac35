import math

import numpy as np
import pytest

from activecasa import kernels
from activecasa import _fallback
from activecasa.errors import ConfigError
from activecasa.frontend import (
    AuditoryFrontend,
    FrontendConfig,
    compute_ratemap,
    design_filterbank,
    extract_ild,
    extract_itd,
    ihc_envelope,
    ihc_pole,
    ratemap_pole,
    spectral_features,
    spectral_features_batch,
)

from oracles import erb_rate, erb_rate_inverse, lag_of_max_xcorr, one_pole_lowpass_mag

FS = 44100


def test_filterbank_endpoints_and_spacing():
    cf = design_filterbank(FrontendConfig()).center_freqs
    assert cf.size == 64
    assert cf[0] == 80.0 and cf[-1] == 8000.0
    assert np.allclose(np.diff([erb_rate(f) for f in cf]), (erb_rate(8000) - erb_rate(80)) / 63)


def test_two_and_three_channel_centers():
    assert design_filterbank(FrontendConfig(num_channels=2)).center_freqs.tolist() == [80.0, 8000.0]
    mid = design_filterbank(FrontendConfig(num_channels=3)).center_freqs[1]
    assert mid == pytest.approx(erb_rate_inverse(0.5 * (erb_rate(80) + erb_rate(8000))), rel=1e-12)


@pytest.mark.parametrize("kw", [dict(f_high=30000.0), dict(num_channels=1), dict(f_low=9000.0), dict(frame_len=0.0)])
def test_invalid_configs_rejected(kw):
    with pytest.raises(ConfigError):
        FrontendConfig(**kw)


def test_gammatone_channel_peaks_at_its_center():
    bank = design_filterbank(FrontendConfig(num_channels=16))
    t = np.arange(int(0.2 * FS)) / FS
    for c in (2, 8, 14):
        gains = []
        for f in bank.center_freqs[c] * np.array([0.8, 1.0, 1.25]):
            y = bank.filter(np.sin(2 * np.pi * f * t))[c, -4000:]
            gains.append(np.sqrt(2 * np.mean(y**2)))
        assert gains[1] == pytest.approx(1.0, abs=0.05)  # unity gain at centre
        assert gains[1] > gains[0] and gains[1] > gains[2]


def test_gammatone_envelope_peaks_are_aligned():
    bank = design_filterbank(FrontendConfig(num_channels=8))
    imp = np.zeros(4000)
    imp[0] = 1.0
    out = bank.filter(imp)
    peaks = np.argmax(np.abs(out), axis=1)
    # all channels peak within a few carrier samples of the common delay
    assert np.ptp(peaks) <= 3 + int(FS / bank.center_freqs[0] / 2)


def test_ihc_rectifies_and_passes_dc():
    assert np.all(ihc_envelope(-np.abs(np.random.default_rng(0).standard_normal(500))) == 0.0)
    y = ihc_envelope(np.full(5000, 0.7))
    assert y[-1] == pytest.approx(0.7, rel=1e-9)


def test_ihc_ripple_matches_analytic_response():
    cfg = FrontendConfig()
    f = 100.0
    n = int(0.5 * FS)
    t = np.arange(n) / FS
    y = ihc_envelope(np.sin(2 * np.pi * f * t), cfg)
    tail = y[-int(10 * FS / f):]  # ten whole periods at steady state
    tt = t[-tail.size:]
    fundamental = 2 * np.hypot(np.mean(tail * np.sin(2 * np.pi * f * tt)), np.mean(tail * np.cos(2 * np.pi * f * tt)))
    # half-wave rectified sine has a fundamental of amplitude 1/2; two poles in cascade
    expected = 0.5 * one_pole_lowpass_mag(ihc_pole(cfg), f, FS) ** 2
    assert fundamental == pytest.approx(expected, rel=2e-3)
    assert np.mean(tail) == pytest.approx(1 / math.pi, rel=2e-3)


def test_itd_identical_frames_is_zero():
    x = np.random.default_rng(1).standard_normal(882)
    assert extract_itd(x, x) == 0.0


def test_itd_of_delayed_right_channel():
    x = np.random.default_rng(2).standard_normal(2000)
    left, right = x[100:982], x[90:972]  # right lags left by 10 samples
    assert extract_itd(left, right) == pytest.approx(10 / FS)
    assert lag_of_max_xcorr(left, right, 48) == 10


def test_itd_matches_direct_search_on_random_frames():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a, b = rng.standard_normal(882), rng.standard_normal(882)
        assert extract_itd(a, b) * FS == pytest.approx(lag_of_max_xcorr(a, b, 48))


def test_ild_definition_and_guard():
    x = np.random.default_rng(4).standard_normal(882)
    assert extract_ild(x, x) == 0.0
    assert extract_ild(math.sqrt(10) * x, x) == pytest.approx(10.0)
    assert extract_ild(x, np.zeros_like(x)) is None


def test_independent_noise_validity_depends_on_energy_only():
    fe = AuditoryFrontend()
    rng = np.random.default_rng(5)
    cues = fe.analyze(rng.standard_normal(FS // 2), rng.standard_normal(FS // 2))
    assert fe.validity(cues["energy_left"], cues["energy_right"]).all()


def test_ratemap_zero_constant_and_step():
    cfg = FrontendConfig()
    assert np.all(compute_ratemap(np.zeros(4410), cfg) == 0.0)
    n = 20 * cfg.frame_samples
    rm = compute_ratemap(np.full(n, 0.25), cfg)
    assert rm.size == 20
    # closed-form response of the unity-DC leaky integrator to a step
    p = ratemap_pole(cfg)
    k = np.arange(n)
    y = 0.25 * (1 - p ** (k + 1))
    expected = y.reshape(20, -1).mean(axis=1)
    assert np.allclose(rm, expected, rtol=1e-10)
    assert np.all(np.diff(rm) >= 0) and rm[-1] == pytest.approx(0.25, rel=1e-6)


def test_frame_count_is_floor():
    fe = AuditoryFrontend()
    cues = fe.analyze(np.ones(882 * 3 + 500), np.ones(882 * 3 + 500))
    assert cues["itd"].shape == (3, 64)


def test_energy_floor_marks_quiet_units_invalid():
    fe = AuditoryFrontend()
    e = np.ones((2, 3))
    e[0, 1] = 1e-10
    v = fe.validity(e, e)
    assert not v[0, 1] and v.sum() == 5
    zero_right = e.copy()
    zero_right[1, 2] = 0.0
    assert not fe.validity(e, zero_right)[1, 2]


def test_spectral_attributes_single_channel():
    cf = design_filterbank(FrontendConfig()).center_freqs
    frame = np.zeros(64)
    frame[17] = 3.0
    f, degenerate = spectral_features(frame, cf)
    assert not degenerate
    assert f[0] == pytest.approx(cf[17])
    assert f[1] == 0.0
    assert f[4] == pytest.approx(0.0, abs=1e-9)
    assert f[5] == pytest.approx(64.0)
    assert f[6] == pytest.approx(0.0, abs=1e-12)


def test_spectral_attributes_uniform_and_two_peaks():
    cf = design_filterbank(FrontendConfig()).center_freqs
    f, _ = spectral_features(np.full(64, 0.3), cf)
    assert f[4] == pytest.approx(1.0) and f[5] == pytest.approx(1.0) and f[6] == pytest.approx(1.0)
    two = np.zeros(64)
    two[[5, 40]] = 1.0
    f2, _ = spectral_features(two, cf)
    assert f2[0] == pytest.approx(0.5 * (cf[5] + cf[40]))
    assert f2[2] == pytest.approx(0.0, abs=1e-9)  # symmetric about the centroid


def test_spectral_attributes_zero_frame_fallback():
    cf = design_filterbank(FrontendConfig()).center_freqs
    feats, degenerate = spectral_features_batch(np.zeros((2, 64)), cf)
    assert degenerate.all()
    assert np.all(np.isfinite(feats))
    assert feats[0, 4] == 1.0


def test_block_csv_round_trip(tmp_path):
    fe = AuditoryFrontend()
    rng = np.random.default_rng(6)
    x = rng.standard_normal(fe.cfg.block_samples)
    blk = fe.blocks(x, 0.5 * x)[0]
    path = tmp_path / "block.csv"
    blk.to_csv(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.size == 25 * 64
    assert np.allclose(data["ild_db"].reshape(25, 64), blk.ild)
    assert np.allclose(data["itd_s"].reshape(25, 64), blk.itd)


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")
def test_compiled_and_fallback_kernels_agree():
    from activecasa import _kernels

    bank = design_filterbank(FrontendConfig(num_channels=12))
    x = np.random.default_rng(7).standard_normal(6000)
    args = (
        x, np.ascontiguousarray(bank.poles.real), np.ascontiguousarray(bank.poles.imag), bank.gains,
        np.ascontiguousarray(bank.phase.real), np.ascontiguousarray(bank.phase.imag),
        np.ascontiguousarray(bank.delays, dtype=np.int64),
    )
    a, b = _kernels.gammatone_bank(*args), _fallback.gammatone_bank(*args)
    assert np.allclose(a, b, atol=1e-10)
    ia, ib = _kernels.ihc_lowpass(a, 0.87), _fallback.ihc_lowpass(a, 0.87)
    assert np.allclose(ia, ib, atol=1e-12)
    ra = _kernels.ratemap_frames(ia, 0.997, 441, 300, 12)
    rb = _fallback.ratemap_frames(ia, 0.997, 441, 300, 12)
    assert np.allclose(ra, rb, rtol=1e-10)
    right = np.roll(ia, 4, axis=1)
    la, _ = _kernels.xcorr_lags(ia, right, 441, 300, 12, 48)
    lb, _ = _fallback.xcorr_lags(ia, right, 441, 300, 12, 48)
    assert np.array_equal(la, lb)
