"""Auditory front-end: gammatone analysis, IHC envelopes, binaural cues, ratemaps.

Arrays laid out per time-frequency unit use shape ``(frames, channels)``,
i.e. ``[k, l]`` indexing.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError

GAMMATONE_ORDER = 4
N_SPECTRAL = 7
SPECTRAL_NAMES = ("centroid", "spread", "skewness", "kurtosis", "flatness", "crest", "entropy")


def erb_rate(f):
    """Glasberg & Moore ERB-rate (Cams) of frequency ``f`` in Hz."""
    return 21.4 * np.log10(4.37e-3 * np.asarray(f, dtype=np.float64) + 1.0)


def erb_rate_inv(e):
    return (10.0 ** (np.asarray(e, dtype=np.float64) / 21.4) - 1.0) / 4.37e-3


def erb_bandwidth(f):
    return 24.7 * (4.37e-3 * np.asarray(f, dtype=np.float64) + 1.0)


@dataclass(frozen=True)
class FrontendConfig:
    sample_rate: float = 44100.0
    num_channels: int = 64
    f_low: float = 80.0
    f_high: float = 8000.0
    frame_len: float = 0.020
    ratemap_tau: float = 0.008
    block_frames: int = 25
    # relative to the block's largest left+right frame energy
    energy_floor: float = 1e-8
    ihc_cutoff: float = 1000.0
    max_itd: float = 1.1e-3
    interpolate_itd: bool = False

    def __post_init__(self):
        if self.num_channels < 2:
            raise ConfigError("num_channels must be >= 2")
        if not 0 < self.f_low < self.f_high:
            raise ConfigError("need 0 < f_low < f_high")
        if self.f_high > self.sample_rate / 2:
            raise ConfigError(
                f"f_high={self.f_high} Hz exceeds Nyquist ({self.sample_rate / 2} Hz)"
            )
        n = self.frame_len * self.sample_rate
        if n < 1 or abs(n - round(n)) > 1e-6:
            raise ConfigError("frame_len * sample_rate must be a positive integer")
        if self.block_frames < 1:
            raise ConfigError("block_frames must be >= 1")

    @property
    def frame_samples(self) -> int:
        return int(round(self.frame_len * self.sample_rate))

    @property
    def block_samples(self) -> int:
        return self.frame_samples * self.block_frames

    @property
    def block_duration(self) -> float:
        return self.block_frames * self.frame_len

    @property
    def max_lag(self) -> int:
        return int(math.floor(self.max_itd * self.sample_rate + 1e-9))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class GammatoneBank:
    """Phase-compensated 4th-order gammatone filterbank.

    Each channel is a cascade of four identical complex one-pole resonators.
    Channels are delayed so their impulse-response envelope maxima coincide,
    and the carrier phase is rotated so the fine structure peaks there too.
    """

    sample_rate: float
    center_freqs: np.ndarray
    bandwidths: np.ndarray
    poles: np.ndarray
    gains: np.ndarray
    peak_samples: np.ndarray
    delays: np.ndarray
    phase: np.ndarray

    @property
    def num_channels(self) -> int:
        return self.center_freqs.size

    def filter(self, x) -> np.ndarray:
        """Return the ``(channels, samples)`` aligned real filterbank output."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        return kernels.gammatone_bank(
            x,
            np.ascontiguousarray(self.poles.real),
            np.ascontiguousarray(self.poles.imag),
            self.gains,
            np.ascontiguousarray(self.phase.real),
            np.ascontiguousarray(self.phase.imag),
            np.ascontiguousarray(self.delays, dtype=np.int64),
        )


def design_filterbank(cfg: FrontendConfig) -> GammatoneBank:
    fs = cfg.sample_rate
    if cfg.f_high > fs / 2:
        raise ConfigError(f"f_high={cfg.f_high} Hz exceeds Nyquist ({fs / 2} Hz)")
    cams = np.linspace(erb_rate(cfg.f_low), erb_rate(cfg.f_high), cfg.num_channels)
    cf = erb_rate_inv(cams)
    cf[0], cf[-1] = cfg.f_low, cfg.f_high
    bw = 1.019 * erb_bandwidth(cf)
    radius = np.exp(-2.0 * np.pi * bw / fs)
    theta = 2.0 * np.pi * cf / fs
    poles = radius * np.exp(1j * theta)
    gains = 2.0 * (1.0 - radius) ** GAMMATONE_ORDER

    # discrete envelope of the cascade IR is C(n+3, 3) * radius**n
    peaks = np.empty(cf.size, dtype=np.int64)
    for c, r in enumerate(radius):
        n_max = int(10 * GAMMATONE_ORDER / (1.0 - r)) + 10
        n = np.arange(n_max)
        log_env = (
            np.log(n + 1.0) + np.log(n + 2.0) + np.log(n + 3.0) + n * np.log(r)
        )
        peaks[c] = int(np.argmax(log_env))
    delays = peaks.max() - peaks
    phase = np.exp(-1j * theta * peaks)
    return GammatoneBank(fs, cf, bw, poles, gains, peaks, delays, phase)


def ihc_pole(cfg: FrontendConfig) -> float:
    return float(np.exp(-2.0 * np.pi * cfg.ihc_cutoff / cfg.sample_rate))


def ratemap_pole(cfg: FrontendConfig) -> float:
    return float(np.exp(-1.0 / (cfg.ratemap_tau * cfg.sample_rate)))


def ihc_envelope(channel_signal, cfg: FrontendConfig | None = None) -> np.ndarray:
    """Half-wave rectification followed by the IHC low-pass (unity DC gain)."""
    cfg = cfg or FrontendConfig()
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(channel_signal, dtype=np.float64)))
    return kernels.ihc_lowpass(x, ihc_pole(cfg))[0]


def compute_ratemap(channel_signal, cfg: FrontendConfig | None = None) -> np.ndarray:
    """Leaky-integrated, frame-averaged rate for one IHC channel."""
    cfg = cfg or FrontendConfig()
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(channel_signal, dtype=np.float64)))
    n_frames = x.shape[1] // cfg.frame_samples
    return kernels.ratemap_frames(x, ratemap_pole(cfg), cfg.frame_samples, 0, n_frames)[0]


def _frame_energy(ihc, frame_len, start, n_frames):
    seg = ihc[:, start : start + frame_len * n_frames]
    return (seg.reshape(ihc.shape[0], n_frames, frame_len) ** 2).sum(axis=2)


def _interpolate_lags(left, right, lags, frame_len, start, max_lag):
    """Parabolic refinement of integer lags, computed directly at lag-1, lag, lag+1."""
    nch, n_frames = lags.shape
    seg_l = left[:, start : start + frame_len * n_frames].reshape(nch, n_frames, frame_len)
    seg_r = right[:, start : start + frame_len * n_frames].reshape(nch, n_frames, frame_len)
    seg_l = seg_l - seg_l.mean(axis=2, keepdims=True)
    seg_r = seg_r - seg_r.mean(axis=2, keepdims=True)
    padded = np.pad(seg_r, ((0, 0), (0, 0), (max_lag + 1, max_lag + 1)))
    idx = np.arange(frame_len)
    vals = []
    for off in (-1, 0, 1):
        shift = lags + off + max_lag + 1
        gathered = np.take_along_axis(padded, idx[None, None, :] + shift[..., None], axis=2)
        vals.append((seg_l * gathered).sum(axis=2))
    ym, y0, yp = vals
    denom = ym - 2.0 * y0 + yp
    frac = np.where(denom < 0, 0.5 * (ym - yp) / np.where(denom < 0, denom, 1.0), 0.0)
    frac = np.clip(frac, -0.5, 0.5)
    inside = np.abs(lags) < max_lag
    return lags + np.where(inside, frac, 0.0)


def extract_itd(left, right, cfg: FrontendConfig | None = None) -> float:
    """ITD in seconds for one frame of IHC output; positive when left leads."""
    cfg = cfg or FrontendConfig()
    left = np.ascontiguousarray(np.atleast_2d(np.asarray(left, dtype=np.float64)))
    right = np.ascontiguousarray(np.atleast_2d(np.asarray(right, dtype=np.float64)))
    if left.shape != right.shape:
        raise ValueError("left and right frames must have equal length")
    n = left.shape[1]
    max_lag = min(cfg.max_lag, n - 1)
    lags, _ = kernels.xcorr_lags(left, right, n, 0, 1, max_lag)
    lag = lags.astype(np.float64)
    if cfg.interpolate_itd:
        lag = _interpolate_lags(left, right, lags, n, 0, max_lag)
    return float(lag[0, 0] / cfg.sample_rate)


def extract_ild(left, right, floor: float = 0.0) -> float | None:
    """Frame ILD in dB (left over right), or ``None`` if either energy is at or below ``floor``."""
    el = float(np.sum(np.square(left, dtype=np.float64)))
    er = float(np.sum(np.square(right, dtype=np.float64)))
    if el <= floor or er <= floor:
        return None
    return 10.0 * math.log10(el / er)


def spectral_features_batch(frames, center_freqs, fallback_centroid: float | None = None):
    """Spectral attributes for each row of a ``(frames, channels)`` ratemap.

    Returns ``(features, degenerate)`` where ``features`` has shape
    ``(frames, 7)`` ordered as ``SPECTRAL_NAMES`` and ``degenerate`` marks
    all-zero rows, which receive the fixed fallback vector.
    """
    r = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    cf = np.asarray(center_freqs, dtype=np.float64)
    n_ch = r.shape[1]
    if fallback_centroid is None:
        fallback_centroid = float(erb_rate_inv(0.5 * (erb_rate(cf[0]) + erb_rate(cf[-1]))))
    total = r.sum(axis=1)
    degenerate = ~(total > 0)
    safe_total = np.where(degenerate, 1.0, total)
    p = r / safe_total[:, None]

    centroid = p @ cf
    dev = cf[None, :] - centroid[:, None]
    var = np.sum(p * dev**2, axis=1)
    spread = np.sqrt(var)
    # below this the spread is rounding residue of a single-channel frame
    has_spread = spread > 1e-9 * cf[-1]
    s = np.where(has_spread, spread, 1.0)
    z = dev / s[:, None]
    skew = np.where(has_spread, np.sum(p * z**3, axis=1), 0.0)
    kurt = np.where(has_spread, np.sum(p * z**4, axis=1), 0.0)

    mean = safe_total / n_ch
    shifted = r + 1e-12 * mean[:, None]
    flatness = np.exp(np.mean(np.log(shifted), axis=1)) / shifted.mean(axis=1)
    flatness = np.clip(flatness, 0.0, 1.0)
    crest = r.max(axis=1) / mean
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    entropy = np.clip(-plogp.sum(axis=1) / np.log(n_ch), 0.0, 1.0)

    feats = np.stack([centroid, spread, skew, kurt, flatness, crest, entropy], axis=1)
    feats[degenerate] = [fallback_centroid, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
    return feats, degenerate


def spectral_features(ratemap_frame, center_freqs, fallback_centroid: float | None = None):
    """Seven spectral attributes of one ratemap frame plus its degenerate flag."""
    feats, degenerate = spectral_features_batch(
        np.asarray(ratemap_frame, dtype=np.float64)[None, :], center_freqs, fallback_centroid
    )
    return feats[0], bool(degenerate[0])


@dataclass
class AuditoryBlock:
    """Binaural cues and ratemaps for one block of ``K`` frames by ``L`` channels."""

    itd: np.ndarray
    ild: np.ndarray
    valid: np.ndarray
    ratemap: np.ndarray
    center_freqs: np.ndarray
    head_orientation: float = 0.0
    energy: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.itd.shape

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "l", "itd_s", "ild_db", "ratemap", "valid"])
            K, L = self.shape
            for k in range(K):
                for l in range(L):
                    w.writerow([
                        k, l, repr(float(self.itd[k, l])), repr(float(self.ild[k, l])),
                        repr(float(self.ratemap[k, l])), int(self.valid[k, l]),
                    ])


class AuditoryFrontend:
    """Turns two-channel ear signals into per-frame binaural cues and ratemaps."""

    def __init__(self, cfg: FrontendConfig | None = None):
        self.cfg = cfg or FrontendConfig()
        self.bank = design_filterbank(self.cfg)

    @property
    def center_freqs(self) -> np.ndarray:
        return self.bank.center_freqs

    def n_frames(self, n_samples: int, preroll: int = 0) -> int:
        return max(0, (n_samples - preroll) // self.cfg.frame_samples)

    def _ihc(self, x):
        return kernels.ihc_lowpass(self.bank.filter(x), ihc_pole(self.cfg))

    def monaural_ratemap(self, signal, preroll: int = 0) -> np.ndarray:
        """``(frames, channels)`` ratemap of a single signal."""
        n_frames = self.n_frames(len(signal), preroll)
        ihc = self._ihc(signal)
        rm = kernels.ratemap_frames(ihc, ratemap_pole(self.cfg), self.cfg.frame_samples, preroll, n_frames)
        return rm.T.copy()

    def analyze(self, left, right, preroll: int = 0) -> dict:
        """Frame-level cues over a whole signal pair.

        The first ``preroll`` samples only warm up the filters. Returns a
        dict of ``(frames, channels)`` arrays: ``itd`` (s), ``ild`` (dB, NaN
        where either ear is silent), ``ratemap``, ``energy_left``,
        ``energy_right``.
        """
        left = np.asarray(left, dtype=np.float64)
        right = np.asarray(right, dtype=np.float64)
        if left.shape != right.shape or left.ndim != 1:
            raise ValueError("left and right must be 1-D arrays of equal length")
        cfg = self.cfg
        fl = cfg.frame_samples
        n_frames = self.n_frames(left.size, preroll)
        ihc_l = self._ihc(left)
        ihc_r = self._ihc(right)
        lags, _ = kernels.xcorr_lags(ihc_l, ihc_r, fl, preroll, n_frames, cfg.max_lag)
        lag = lags.astype(np.float64)
        if cfg.interpolate_itd:
            lag = _interpolate_lags(ihc_l, ihc_r, lags, fl, preroll, cfg.max_lag)
        e_l = _frame_energy(ihc_l, fl, preroll, n_frames)
        e_r = _frame_energy(ihc_r, fl, preroll, n_frames)
        pole = ratemap_pole(cfg)
        rm = 0.5 * (
            kernels.ratemap_frames(ihc_l, pole, fl, preroll, n_frames)
            + kernels.ratemap_frames(ihc_r, pole, fl, preroll, n_frames)
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            ild = np.where((e_l > 0) & (e_r > 0), 10.0 * np.log10(e_l / e_r), np.nan)
        return {
            "itd": (lag / cfg.sample_rate).T.copy(),
            "ild": ild.T.copy(),
            "ratemap": rm.T.copy(),
            "energy_left": e_l.T.copy(),
            "energy_right": e_r.T.copy(),
        }

    def validity(self, e_left, e_right) -> np.ndarray:
        total = e_left + e_right
        peak = total.max() if total.size else 0.0
        return (total >= self.cfg.energy_floor * peak) & (e_left > 0) & (e_right > 0) & (peak > 0)

    def make_block(self, cues: dict, frames: slice | None = None, head_orientation: float = 0.0) -> AuditoryBlock:
        sl = frames if frames is not None else slice(None)
        e_l = cues["energy_left"][sl]
        e_r = cues["energy_right"][sl]
        valid = self.validity(e_l, e_r)
        ild = np.where(valid, cues["ild"][sl], np.nan)
        return AuditoryBlock(
            itd=cues["itd"][sl].copy(),
            ild=ild,
            valid=valid,
            ratemap=cues["ratemap"][sl].copy(),
            center_freqs=self.center_freqs,
            head_orientation=float(head_orientation),
            energy=e_l + e_r,
        )

    def blocks(self, left, right, head_orientation: float = 0.0, preroll: int = 0) -> list[AuditoryBlock]:
        """Split an ear-signal pair into consecutive complete blocks."""
        cues = self.analyze(left, right, preroll)
        K = self.cfg.block_frames
        n_blocks = cues["itd"].shape[0] // K
        return [
            self.make_block(cues, slice(b * K, (b + 1) * K), head_orientation)
            for b in range(n_blocks)
        ]
