import numpy as np
import pytest
from scipy.io import wavfile
from scipy.signal import stft

from activecasa.synth import CLASSES, siren, synth_class_signal, synthetic_pool, wav_pool

FS = 44100


@pytest.mark.parametrize("label", CLASSES)
def test_generators_are_seeded_and_unit_rms(label):
    a = synth_class_signal(label, 1.0, 5)
    b = synth_class_signal(label, 1.0, 5)
    assert np.array_equal(a, b)
    assert a.size == FS
    assert np.sqrt(np.mean(a**2)) == pytest.approx(1.0)
    assert not np.array_equal(a, synth_class_signal(label, 1.0, 6))


def test_unknown_class_rejected():
    with pytest.raises(ValueError):
        synth_class_signal("violin", 1.0, 0)


def test_siren_sweeps_between_its_endpoints():
    x = siren(4.0, np.random.default_rng(0), f_lo=600.0, f_hi=1400.0, period=1.0)
    f, t, z = stft(x, FS, nperseg=2048, noverlap=1536)
    peak = f[np.argmax(np.abs(z[:, 2:-2]), axis=0)]
    assert peak.min() == pytest.approx(600.0, abs=40.0)
    assert peak.max() == pytest.approx(1400.0, abs=40.0)
    # the sweep repeats once per period
    centred = peak - peak.mean()
    crossings = np.count_nonzero(np.diff(np.sign(centred)) > 0)
    assert 3 <= crossings <= 5


def test_engine_energy_is_low_frequency():
    x = synth_class_signal("engine", 3.0, 1)
    spec = np.abs(np.fft.rfft(x)) ** 2
    f = np.fft.rfftfreq(x.size, 1 / FS)
    assert spec[f < 500].sum() / spec.sum() > 0.8


def test_pool_split_by_item_index():
    pool = synthetic_pool(items_per_class=4, duration=0.2, seed=0, classes=("siren", "dog"))
    train, test = pool.split(1, 2)
    assert len(train["siren"]) == 2 and len(test["dog"]) == 2
    assert np.array_equal(test["siren"][0], pool.items["siren"][1])


def test_wav_pool_reads_class_directories(tmp_path):
    for label in ("a", "b"):
        (tmp_path / label).mkdir()
        for i in range(2):
            wavfile.write(tmp_path / label / f"{i}.wav", FS, (0.1 * np.ones(100) * (i + 1)).astype(np.float32))
    (tmp_path / "empty").mkdir()
    pool = wav_pool(tmp_path)
    assert pool.labels == ["a", "b"]
    assert np.sqrt(np.mean(pool.items["a"][1] ** 2)) == pytest.approx(1.0)


def test_wav_pool_checks_rate(tmp_path):
    (tmp_path / "a").mkdir()
    wavfile.write(tmp_path / "a" / "x.wav", 16000, np.zeros(10, dtype=np.float32))
    with pytest.raises(ValueError):
        wav_pool(tmp_path)
