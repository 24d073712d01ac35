"""WAV input/output."""
from __future__ import annotations

import numpy as np
from scipy.io import wavfile


def read_wav(path) -> tuple[int, np.ndarray]:
    """Read a WAV file as float64 in [-1, 1]; integer PCM is rescaled."""
    fs, data = wavfile.read(path)
    if np.issubdtype(data.dtype, np.integer):
        info = np.iinfo(data.dtype)
        if info.min == 0:  # unsigned 8-bit
            data = (data.astype(np.float64) - 128.0) / 128.0
        else:
            data = data.astype(np.float64) / float(-info.min)
    else:
        data = data.astype(np.float64)
    return int(fs), data


def read_binaural(path, sample_rate: int = 44100) -> tuple[np.ndarray, np.ndarray]:
    fs, data = read_wav(path)
    if fs != sample_rate:
        raise ValueError(f"{path}: expected {sample_rate} Hz, got {fs} Hz")
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected two channels")
    return data[:, 0].copy(), data[:, 1].copy()


def write_wav(path, left, right=None, sample_rate: int = 44100, normalize: bool = True) -> None:
    """Write float32 WAV; mono if ``right`` is None."""
    data = np.asarray(left, dtype=np.float64)
    if right is not None:
        data = np.stack([data, np.asarray(right, dtype=np.float64)], axis=1)
    if normalize:
        peak = np.max(np.abs(data)) if data.size else 0.0
        if peak > 0:
            data = 0.99 * data / peak
    wavfile.write(path, int(sample_rate), data.astype(np.float32))
