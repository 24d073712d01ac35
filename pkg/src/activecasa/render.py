"""Binaural renderers: a parametric spherical head and a measured-HRIR loader."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .circular import wrap
from .errors import ConfigError


def _next_pow2(n: int) -> int:
    return 1 << int(np.ceil(np.log2(max(n, 2))))


@dataclass(frozen=True)
class SphericalHeadRenderer:
    """Rigid spherical head with Woodworth ITDs and one-pole/one-zero head shadow.

    Azimuths are in radians, counter-clockwise, 0 straight ahead, +pi/2 at
    the left ear. Arrival delays use ears at +-90 degrees. The shadow filter
    uses ears set back to +-``shadow_ear_deg`` which makes ILDs differ between
    front and back while keeping left/right antisymmetry.
    """

    sample_rate: float = 44100.0
    head_radius: float = 0.0875
    speed_of_sound: float = 343.0
    shadow_ear_deg: float = 100.0
    alpha_min: float = 0.1
    theta_min_deg: float = 150.0

    @property
    def max_delay(self) -> float:
        return self.head_radius / self.speed_of_sound * (1.0 + np.pi / 2.0)

    def _ear_delay(self, azimuth: float, ear: float) -> float:
        a_c = self.head_radius / self.speed_of_sound
        theta = abs(wrap(azimuth - ear))
        if theta < np.pi / 2:
            t = -a_c * np.cos(theta)
        else:
            t = a_c * (theta - np.pi / 2)
        return t + a_c

    def itd(self, azimuth: float) -> float:
        """Right-ear minus left-ear delay; positive when the left ear leads."""
        return self._ear_delay(azimuth, -np.pi / 2) - self._ear_delay(azimuth, np.pi / 2)

    def _shadow_alpha(self, azimuth: float, ear: float) -> float:
        theta = abs(wrap(azimuth - ear))
        theta_min = np.deg2rad(self.theta_min_deg)
        return (1.0 + self.alpha_min / 2) + (1.0 - self.alpha_min / 2) * np.cos(theta / theta_min * np.pi)

    def ear_responses(self, azimuth: float, freqs) -> tuple[np.ndarray, np.ndarray]:
        """Complex frequency responses (left, right) at ``freqs`` Hz."""
        w = 2.0 * np.pi * np.asarray(freqs, dtype=np.float64)
        w0 = self.speed_of_sound / self.head_radius
        setback = np.deg2rad(self.shadow_ear_deg)
        out = []
        for delay_ear, shadow_ear in ((np.pi / 2, setback), (-np.pi / 2, -setback)):
            alpha = self._shadow_alpha(azimuth, shadow_ear)
            shadow = (1.0 + 1j * alpha * w / (2 * w0)) / (1.0 + 1j * w / (2 * w0))
            out.append(shadow * np.exp(-1j * w * self._ear_delay(azimuth, delay_ear)))
        return out[0], out[1]

    def render(self, signal, azimuth: float) -> tuple[np.ndarray, np.ndarray]:
        """Left and right ear signals for a mono source at relative ``azimuth``."""
        x = np.asarray(signal, dtype=np.float64)
        n = x.size
        pad = int(np.ceil(2 * self.max_delay * self.sample_rate)) + 256
        nfft = _next_pow2(n + pad)
        spec = np.fft.rfft(x, nfft)
        freqs = np.fft.rfftfreq(nfft, 1.0 / self.sample_rate)
        h_l, h_r = self.ear_responses(azimuth, freqs)
        left = np.fft.irfft(spec * h_l, nfft)[:n]
        right = np.fft.irfft(spec * h_r, nfft)[:n]
        return left, right


class HrirRenderer:
    """Renders with measured HRIR pairs, one stereo WAV per azimuth.

    Files in ``directory`` must carry the azimuth in degrees in their name,
    e.g. ``azi_-30.wav`` or ``hrir_030.wav``. The nearest measured direction
    is used.
    """

    _pattern = re.compile(r"(-?\d+(?:\.\d+)?)")

    def __init__(self, directory, sample_rate: float = 44100.0):
        from .audio import read_wav

        self.sample_rate = sample_rate
        azimuths, irs = [], []
        for path in sorted(Path(directory).glob("*.wav")):
            m = self._pattern.findall(path.stem)
            if not m:
                continue
            fs, data = read_wav(path)
            if fs != sample_rate:
                raise ConfigError(f"{path}: sample rate {fs} != {sample_rate}")
            if data.ndim != 2 or data.shape[1] != 2:
                raise ConfigError(f"{path}: expected a stereo HRIR")
            azimuths.append(float(wrap(np.deg2rad(float(m[-1])))))
            irs.append(data)
        if not azimuths:
            raise ConfigError(f"no HRIR WAV files found in {directory}")
        self.azimuths = np.array(azimuths)
        self.irs = irs

    def render(self, signal, azimuth: float) -> tuple[np.ndarray, np.ndarray]:
        idx = int(np.argmin(np.abs(wrap(self.azimuths - azimuth))))
        ir = self.irs[idx]
        x = np.asarray(signal, dtype=np.float64)
        left = fftconvolve(x, ir[:, 0])[: x.size]
        right = fftconvolve(x, ir[:, 1])[: x.size]
        return left, right


def render_block(renderer, sources, look_direction: float) -> tuple[np.ndarray, np.ndarray]:
    """Mix ``(signal, absolute azimuth)`` sources for a head facing ``look_direction``."""
    if not sources:
        raise ValueError("at least one source is required")
    n = len(sources[0][0])
    if any(len(s) != n for s, _ in sources):
        raise ValueError("source segments must have equal length")
    left = np.zeros(n)
    right = np.zeros(n)
    for signal, azimuth in sources:
        l, r = renderer.render(signal, wrap(azimuth - look_direction))
        left += l
        right += r
    return left, right
