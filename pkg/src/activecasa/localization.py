"""Gaussian azimuth likelihood bank and per-TF-unit azimuth estimation.

Binaural features are modelled in (ITD in milliseconds, ILD in dB) so that
the covariance floor is meaningful for both dimensions.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .circular import wrap
from .errors import EmptyObservationsError, TrainingError
from .frontend import AuditoryBlock, AuditoryFrontend

log = logging.getLogger(__name__)

BANK_FORMAT_VERSION = 1
COV_FLOOR = 1e-6
MIN_TRAINING_FRAMES = 10


def azimuth_grid(m: int = 360) -> np.ndarray:
    """``m`` equidistant angles covering [-pi, pi) once, starting at -pi."""
    return -np.pi + 2.0 * np.pi * np.arange(m) / m


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=float).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class GaussianAzimuthBank:
    """One 2-D Gaussian over (ITD ms, ILD dB) per channel and grid azimuth."""

    azimuths: np.ndarray
    means: np.ndarray  # (L, M, 2)
    covariances: np.ndarray  # (L, M, 2, 2)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cov = np.asarray(self.covariances, dtype=np.float64)
        det = cov[..., 0, 0] * cov[..., 1, 1] - cov[..., 0, 1] * cov[..., 1, 0]
        if np.any(det <= 0) or np.any(cov[..., 0, 0] <= 0):
            raise ValueError("bank covariances must be positive definite")
        inv = np.empty_like(cov)
        inv[..., 0, 0] = cov[..., 1, 1] / det
        inv[..., 1, 1] = cov[..., 0, 0] / det
        inv[..., 0, 1] = -cov[..., 0, 1] / det
        inv[..., 1, 0] = -cov[..., 1, 0] / det
        self._precision = inv
        self._log_norm = -np.log(2.0 * np.pi) - 0.5 * np.log(det)

    @property
    def num_channels(self) -> int:
        return self.means.shape[0]

    @property
    def num_azimuths(self) -> int:
        return self.azimuths.size

    def log_likelihoods(self, channels, features) -> np.ndarray:
        """``(N, M)`` log densities of features ``(N, 2)`` (ITD s, ILD dB)."""
        channels = np.asarray(channels, dtype=np.int64)
        x = np.atleast_2d(np.asarray(features, dtype=np.float64)).copy()
        x[:, 0] *= 1e3
        d = x[:, None, :] - self.means[channels]
        P = self._precision[channels]
        q = (
            P[..., 0, 0] * d[..., 0] ** 2
            + (P[..., 0, 1] + P[..., 1, 0]) * d[..., 0] * d[..., 1]
            + P[..., 1, 1] * d[..., 1] ** 2
        )
        return self._log_norm[channels] - 0.5 * q

    def save(self, path) -> None:
        np.savez_compressed(
            path,
            version=np.array(BANK_FORMAT_VERSION),
            azimuths=self.azimuths,
            means=self.means,
            covariances=self.covariances,
            meta=np.array(json.dumps(self.meta, sort_keys=True)),
        )

    @classmethod
    def load(cls, path) -> "GaussianAzimuthBank":
        with np.load(path, allow_pickle=False) as z:
            version = int(z["version"])
            if version != BANK_FORMAT_VERSION:
                raise ValueError(f"unsupported bank format version {version}")
            return cls(
                azimuths=z["azimuths"].copy(),
                means=z["means"].copy(),
                covariances=z["covariances"].copy(),
                meta=json.loads(str(z["meta"])),
            )


def fit_gaussian(samples) -> tuple[np.ndarray, np.ndarray]:
    """Mean and floor-regularised full covariance of ``(n, 2)`` samples."""
    x = np.asarray(samples, dtype=np.float64)
    mean = x.mean(axis=0)
    cov = np.cov(x, rowvar=False, bias=False) if len(x) > 1 else np.zeros((2, 2))
    cov = 0.5 * (cov + cov.T) + COV_FLOOR * np.eye(2)
    return mean, cov


def train_bank(
    renderer,
    frontend: AuditoryFrontend,
    n_azimuths: int = 360,
    duration: float = 10.0,
    seed: int = 0,
    progress=None,
) -> GaussianAzimuthBank:
    """Fit the azimuth bank from white noise rendered at every grid azimuth."""
    cfg = frontend.cfg
    grid = azimuth_grid(n_azimuths)
    L = cfg.num_channels
    preroll = 5 * cfg.frame_samples
    n = preroll + int(round(duration * cfg.sample_rate))
    means = np.empty((L, n_azimuths, 2))
    covs = np.empty((L, n_azimuths, 2, 2))
    for m, az in enumerate(grid):
        rng = np.random.default_rng(np.random.SeedSequence([seed, m]))
        noise = rng.standard_normal(n)
        left, right = renderer.render(noise, az)
        cues = frontend.analyze(left, right, preroll)
        valid = frontend.validity(cues["energy_left"], cues["energy_right"])
        for l in range(L):
            ok = valid[:, l]
            if ok.sum() < MIN_TRAINING_FRAMES:
                raise TrainingError(
                    f"only {int(ok.sum())} valid frames for channel {l} "
                    f"({frontend.center_freqs[l]:.1f} Hz) at azimuth {np.rad2deg(az):.1f} deg"
                )
            feats = np.stack([cues["itd"][ok, l] * 1e3, cues["ild"][ok, l]], axis=1)
            means[l, m], covs[l, m] = fit_gaussian(feats)
        if progress is not None:
            progress(m + 1, n_azimuths)
    meta = {
        "frontend": cfg.to_dict(),
        "renderer": repr(renderer),
        "duration": duration,
        "seed": seed,
        "units": ["ms", "dB"],
    }
    meta["config_hash"] = config_hash(meta)
    return GaussianAzimuthBank(grid, means, covs, meta)


def posterior_from_loglik(loglik) -> tuple[np.ndarray, np.ndarray]:
    """Normalise log-likelihood rows under a uniform azimuth prior.

    Returns ``(posterior, degenerate)``; rows without any finite entry get
    a uniform posterior and are flagged.
    """
    ll = np.atleast_2d(np.asarray(loglik, dtype=np.float64))
    degenerate = ~np.isfinite(ll).any(axis=1) | np.isnan(ll).any(axis=1)
    safe = np.where(degenerate[:, None], 0.0, ll)
    post = np.exp(safe - logsumexp(safe, axis=1, keepdims=True))
    return post, degenerate


def posterior_azimuth(feature, channel: int, bank: GaussianAzimuthBank) -> np.ndarray:
    """Posterior over the bank's azimuth grid for one (ITD s, ILD dB) feature."""
    ll = bank.log_likelihoods([channel], np.asarray(feature, dtype=np.float64)[None, :])
    post, degenerate = posterior_from_loglik(ll)
    if degenerate[0]:
        log.debug("all azimuth likelihoods vanished; using a uniform posterior")
    return post[0]


def ml_relative_azimuth(posterior, grid=None) -> tuple[float, bool]:
    """Grid azimuth with the largest posterior and whether the maximum was tied.

    Ties resolve to the lowest grid index.
    """
    p = np.asarray(posterior, dtype=np.float64)
    grid = azimuth_grid(p.size) if grid is None else np.asarray(grid)
    idx = int(np.argmax(p))
    tied = int(np.count_nonzero(p == p[idx])) > 1
    return float(grid[idx]), tied


def to_absolute(relative, look_direction):
    """Absolute azimuth from a head-relative one, wrapped to [-pi, pi)."""
    return wrap(np.asarray(relative, dtype=np.float64) + look_direction)


@dataclass
class AzimuthObservations:
    angles: np.ndarray  # (N,) absolute azimuths
    index: np.ndarray  # (N, 2) originating (k, l)
    shape: tuple[int, int]

    def __len__(self) -> int:
        return self.angles.size


def relative_azimuths(block: AuditoryBlock, bank: GaussianAzimuthBank):
    """ML relative azimuth for every valid unit, ordered with k fastest then l."""
    ls, ks = np.nonzero(block.valid.T)
    feats = np.stack([block.itd[ks, ls], block.ild[ks, ls]], axis=1)
    ll = bank.log_likelihoods(ls, feats)
    post, _ = posterior_from_loglik(ll)
    idx = np.argmax(post, axis=1)
    return bank.azimuths[idx], ks, ls


def stack_block(block: AuditoryBlock, bank: GaussianAzimuthBank) -> AzimuthObservations:
    """Absolute-azimuth observation vector for one block."""
    if not block.valid.any():
        raise EmptyObservationsError("block has no valid time-frequency units")
    rel, ks, ls = relative_azimuths(block, bank)
    angles = to_absolute(rel, block.head_orientation)
    return AzimuthObservations(np.atleast_1d(angles), np.stack([ks, ls], axis=1), block.shape)
