"""GMM source models over spectral attributes and block-level stream classification."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from sklearn.mixture import GaussianMixture

from .errors import TrainingError
from .frontend import N_SPECTRAL, spectral_features_batch

log = logging.getLogger(__name__)

N_COMPONENTS = 16
MIN_FRAMES_PER_CLASS = N_COMPONENTS * N_SPECTRAL * 10
MODEL_FORMAT_VERSION = 1


@dataclass
class SourceModel:
    label: str
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    feature_mean: np.ndarray
    feature_std: np.ndarray

    def __post_init__(self):
        self._chol = np.linalg.cholesky(self.covariances)
        self._log_det = 2.0 * np.log(np.diagonal(self._chol, axis1=1, axis2=2)).sum(axis=1)

    def normalize(self, x) -> np.ndarray:
        return (np.atleast_2d(x) - self.feature_mean) / self.feature_std

    def log_likelihood(self, x) -> np.ndarray:
        """Per-frame log density of raw (unnormalised) feature rows."""
        z = self.normalize(x)
        d = z.shape[1]
        out = np.empty((z.shape[0], self.weights.size))
        for j in range(self.weights.size):
            diff = z - self.means[j]
            sol = np.linalg.solve(self._chol[j], diff.T)
            out[:, j] = -0.5 * (d * np.log(2 * np.pi) + self._log_det[j] + np.sum(sol**2, axis=0))
        return logsumexp(out + np.log(self.weights), axis=1)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceModel":
        return cls(
            d["label"],
            np.array(d["weights"]),
            np.array(d["means"]),
            np.array(d["covariances"]),
            np.array(d["feature_mean"]),
            np.array(d["feature_std"]),
        )


def train_source_models(
    features_by_class: dict,
    n_components: int = N_COMPONENTS,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
    reg_covar: float = 1e-6,
    min_frames: int | None = None,
) -> list[SourceModel]:
    """Fit one full-covariance GMM per class on z-scored spectral attributes.

    Normalisation statistics are pooled over all classes so that the class
    likelihoods stay comparable.
    """
    min_frames = MIN_FRAMES_PER_CLASS if min_frames is None else min_frames
    labels = list(features_by_class)
    data = {}
    for label in labels:
        x = np.asarray(features_by_class[label], dtype=np.float64)
        if x.ndim != 2 or x.shape[0] < min_frames:
            n = 0 if x.ndim != 2 else x.shape[0]
            raise TrainingError(f"class {label!r} has {n} frames; need at least {min_frames}")
        data[label] = x
    pooled = np.concatenate([data[l] for l in labels])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    models = []
    for label in labels:
        gmm = GaussianMixture(
            n_components=n_components,
            covariance_type="full",
            max_iter=max_iter,
            tol=tol,
            reg_covar=reg_covar,
            init_params="kmeans",
            random_state=seed,
        )
        gmm.fit((data[label] - mean) / std)
        if not gmm.converged_:
            log.info("GMM for %r stopped at the iteration cap", label)
        models.append(
            SourceModel(label, gmm.weights_.copy(), gmm.means_.copy(), gmm.covariances_.copy(), mean, std)
        )
    return models


def frame_posteriors(x, models) -> tuple[np.ndarray, np.ndarray]:
    """``(n, S)`` class posteriors under a uniform class prior, plus underflow flags."""
    ll = np.stack([m.log_likelihood(x) for m in models], axis=1)
    degenerate = ~np.isfinite(ll).any(axis=1)
    ll = np.where(degenerate[:, None], 0.0, ll)
    return np.exp(ll - logsumexp(ll, axis=1, keepdims=True)), degenerate


def frame_posterior(x, models) -> np.ndarray:
    post, _ = frame_posteriors(np.asarray(x, dtype=np.float64)[None, :], models)
    return post[0]


@dataclass
class BlockDecision:
    index: int | None
    label: str | None
    posterior: np.ndarray
    n_frames: int


def decide(frame_post, skip=None, labels=None) -> BlockDecision:
    """Average frame posteriors over non-skipped frames and take the argmax."""
    p = np.atleast_2d(np.asarray(frame_post, dtype=np.float64))
    keep = np.ones(p.shape[0], dtype=bool) if skip is None else ~np.asarray(skip, dtype=bool)
    if not keep.any():
        return BlockDecision(None, None, np.full(p.shape[1], np.nan), 0)
    avg = p[keep].mean(axis=0)
    idx = int(np.argmax(avg))
    label = labels[idx] if labels is not None else None
    return BlockDecision(idx, label, avg, int(keep.sum()))


def classify_block(features, skip, models) -> BlockDecision:
    """Block decision for one stream's ``(K, 7)`` attribute rows."""
    keep = ~np.asarray(skip, dtype=bool)
    S = len(models)
    post = np.zeros((len(keep), S))
    if keep.any():
        post[keep], _ = frame_posteriors(np.asarray(features)[keep], models)
    return decide(post, ~keep, [m.label for m in models])


def stream_features(ratemap, beta, center_freqs) -> list[tuple[np.ndarray, np.ndarray]]:
    """Spectral attributes of each masked ratemap stream.

    ``ratemap`` is ``(K, L)`` and ``beta`` is ``(K, L, C)``. Returns one
    ``(features (K, 7), skip (K,))`` pair per stream.
    """
    out = []
    for c in range(beta.shape[2]):
        masked = ratemap * beta[:, :, c]
        feats, degenerate = spectral_features_batch(masked, center_freqs)
        out.append((feats, degenerate))
    return out


def save_models(models, path, meta: dict | None = None) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "meta": meta or {},
        "models": [m.to_dict() for m in models],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_models(path) -> list[SourceModel]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')}")
    return [SourceModel.from_dict(d) for d in doc["models"]]
