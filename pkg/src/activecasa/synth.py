"""Seeded synthetic sound classes and labelled sound pools.

The five generators stand in for recorded speech, sirens, dog barks, car
engines and piano. Each output is continuous (no silent gaps) and scaled to
unit RMS.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import butter, sosfilt

from .audio import read_wav

CLASSES = ("speech", "siren", "dog", "engine", "piano")
FS = 44100

# female vowel formants (Hz) and bandwidths
_VOWELS = np.array([
    [850, 1220, 2810],
    [310, 2790, 3310],
    [370, 950, 2670],
    [600, 2330, 2990],
    [500, 900, 2700],
])
_FORMANT_BW = np.array([90.0, 130.0, 200.0])


def _unit_rms(x):
    rms = np.sqrt(np.mean(x**2))
    return x / rms if rms > 0 else x


def _segments(rng, n, lo, hi, fs):
    """Random consecutive segment boundaries (in samples) covering ``n``."""
    edges = [0]
    while edges[-1] < n:
        edges.append(edges[-1] + int(rng.uniform(lo, hi) * fs))
    edges[-1] = n
    return np.array(edges)


def speech(duration, rng, fs=FS):
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    edges = _segments(rng, n, 0.15, 0.3, fs)
    n_syl = len(edges) - 1
    targets = _VOWELS[rng.integers(0, len(_VOWELS), n_syl)].astype(np.float64)
    targets *= rng.uniform(0.95, 1.05, targets.shape)
    centers = 0.5 * (edges[:-1] + edges[1:])
    formants = np.stack([np.interp(np.arange(n), centers, targets[:, i]) for i in range(3)])
    base = rng.uniform(190.0, 230.0)
    syl_glide = np.interp(np.arange(n), centers, rng.uniform(0.9, 1.1, n_syl))
    f0 = base * syl_glide * (1 + 0.03 * np.sin(2 * np.pi * rng.uniform(4, 6) * t))
    phase = 2 * np.pi * np.cumsum(f0) / fs
    out = np.zeros(n)
    for h in range(1, int(4500 / base) + 1):
        fh = h * f0
        amp = 0.05 / h
        for i in range(3):
            amp = amp + np.exp(-0.5 * ((fh - formants[i]) / _FORMANT_BW[i]) ** 2) / (i + 1)
        out += amp * np.sin(h * phase)
    env = np.empty(n)
    for a, b in zip(edges[:-1], edges[1:]):
        env[a:b] = 0.35 + 0.65 * np.sin(np.pi * np.arange(b - a) / (b - a))
    hiss = sosfilt(butter(4, [3000, 6000], "bandpass", fs=fs, output="sos"), rng.standard_normal(n))
    return _unit_rms(out * env + 0.02 * hiss * (1.0 - env))


def siren(duration, rng, fs=FS, f_lo=None, f_hi=None, period=None):
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    f_lo = rng.uniform(550.0, 700.0) if f_lo is None else f_lo
    f_hi = rng.uniform(1300.0, 1600.0) if f_hi is None else f_hi
    period = rng.uniform(0.8, 1.6) if period is None else period
    f = f_lo + (f_hi - f_lo) * 0.5 * (1 - np.cos(2 * np.pi * t / period + rng.uniform(0, 2 * np.pi)))
    phase = 2 * np.pi * np.cumsum(f) / fs
    x = np.sin(phase) + 0.3 * np.sin(2 * phase) + 0.1 * np.sin(3 * phase)
    return _unit_rms(x)


def dog(duration, rng, fs=FS):
    n = int(round(duration * fs))
    sos = butter(4, [300, 3000], "bandpass", fs=fs, output="sos")
    out = 0.05 * sosfilt(sos, rng.standard_normal(n))
    onset = int(rng.uniform(0.0, 0.1) * fs)
    while onset < n:
        length = int(rng.uniform(0.08, 0.15) * fs)
        m = min(length, n - onset)
        tt = np.arange(m) / fs
        f0 = rng.uniform(400.0, 700.0) * (1 - 0.3 * tt / (length / fs))
        phase = 2 * np.pi * np.cumsum(f0) / fs
        harm = sum(np.sin(k * phase) / k for k in range(1, 6))
        noise = sosfilt(sos, rng.standard_normal(m))
        env = (1 - np.exp(-tt / 0.005)) * np.exp(-tt / 0.04)
        out[onset : onset + m] += env * (harm + 0.8 * noise)
        onset += length + int(rng.uniform(0.15, 0.35) * fs)
    return _unit_rms(out)


def engine(duration, rng, fs=FS):
    n = int(round(duration * fs))
    t = np.arange(n) / fs
    f0 = rng.uniform(25.0, 45.0) * (1 + 0.02 * np.sin(2 * np.pi * rng.uniform(0.2, 0.5) * t))
    phase = 2 * np.pi * np.cumsum(f0) / fs
    x = np.zeros(n)
    for h in range(1, 16):
        if h * f0.max() > 450:
            break
        x += np.sin(h * phase + rng.uniform(0, 2 * np.pi)) / h**1.2
    x *= 1 + 0.3 * np.sin(2 * phase)
    rumble = sosfilt(butter(4, 300, "lowpass", fs=fs, output="sos"), rng.standard_normal(n))
    return _unit_rms(x / np.std(x) + 0.3 * rumble / np.std(rumble))


def piano(duration, rng, fs=FS):
    n = int(round(duration * fs))
    out = np.zeros(n)
    onset = 0
    while onset < n:
        f0 = 440.0 * 2 ** ((rng.integers(48, 85) - 69) / 12)
        m = n - onset
        tt = np.arange(m) / fs
        note = np.zeros(m)
        tau = rng.uniform(0.4, 1.0)
        for k in range(1, 9):
            fk = k * f0 * np.sqrt(1 + 1e-4 * k**2)
            if fk > 0.45 * fs:
                break
            note += np.sin(2 * np.pi * fk * tt) * np.exp(-tt * np.sqrt(k) / tau) / k
        note *= 1 - np.exp(-tt / 0.002)
        out[onset:] += rng.uniform(0.6, 1.0) * note
        onset += int(rng.uniform(0.2, 0.45) * fs)
    return _unit_rms(out)


_GENERATORS = {"speech": speech, "siren": siren, "dog": dog, "engine": engine, "piano": piano}


def synth_class_signal(label: str, duration: float, seed, fs: int = FS) -> np.ndarray:
    """Deterministic signal of the given class."""
    if label not in _GENERATORS:
        raise ValueError(f"unknown sound class {label!r}; expected one of {CLASSES}")
    rng = np.random.default_rng(seed)
    return _GENERATORS[label](duration, rng, fs)


@dataclass
class SoundPool:
    """Labelled sound items; item ``i`` of every class belongs to fold ``i % folds``."""

    items: dict = field(default_factory=dict)
    source: str = "synthetic"

    @property
    def labels(self) -> list[str]:
        return list(self.items)

    def split(self, fold: int, folds: int) -> tuple[dict, dict]:
        train, test = {}, {}
        for label, sounds in self.items.items():
            train[label] = [s for i, s in enumerate(sounds) if i % folds != fold]
            test[label] = [s for i, s in enumerate(sounds) if i % folds == fold]
        return train, test


def synthetic_pool(items_per_class: int = 10, duration: float = 3.0, seed: int = 0,
                   classes=CLASSES, fs: int = FS) -> SoundPool:
    items = {}
    for ci, label in enumerate(classes):
        items[label] = [
            synth_class_signal(label, duration, np.random.SeedSequence([seed, ci, i]), fs)
            for i in range(items_per_class)
        ]
    return SoundPool(items, "synthetic")


def wav_pool(directory, fs: int = FS) -> SoundPool:
    """Pool from class-named subdirectories of mono (or first-channel) WAV files."""
    items = {}
    for sub in sorted(p for p in Path(directory).iterdir() if p.is_dir()):
        sounds = []
        for path in sorted(sub.glob("*.wav")):
            rate, data = read_wav(path)
            if rate != fs:
                raise ValueError(f"{path}: expected {fs} Hz, got {rate} Hz")
            sounds.append(_unit_rms(data if data.ndim == 1 else data[:, 0]))
        if sounds:
            items[sub.name] = sounds
    if not items:
        raise ValueError(f"no class subdirectories with WAV files in {directory}")
    return SoundPool(items, str(directory))
