"""Mixtures of von Mises distributions fitted by EM, and the soft masks they induce."""
from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import i0e, i1e, logsumexp

from .circular import wrap

log = logging.getLogger(__name__)

KAPPA_MAX = 1e4
WEIGHT_FLOOR = 1e-8


def _log_i0(kappa):
    kappa = np.asarray(kappa, dtype=np.float64)
    return np.log(i0e(kappa)) + kappa


def vm_logpdf(phi, mu, kappa):
    """Log density of the von Mises distribution; broadcasts over inputs."""
    kappa = np.asarray(kappa, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    return kappa * (np.cos(phi - mu) - 1.0) - np.log(2.0 * np.pi * i0e(kappa))


def vm_pdf(phi, mu, kappa, kappa_max: float = KAPPA_MAX):
    """von Mises density ``exp(kappa cos(phi - mu)) / (2 pi I0(kappa))``.

    Concentrations above ``kappa_max`` are clamped with a warning.
    """
    kappa = np.asarray(kappa, dtype=np.float64)
    if np.any(kappa < 0):
        raise ValueError("kappa must be non-negative")
    if np.any(kappa > kappa_max):
        warnings.warn(f"kappa clamped to {kappa_max}", RuntimeWarning, stacklevel=2)
        kappa = np.minimum(kappa, kappa_max)
    out = np.exp(vm_logpdf(phi, mu, kappa))
    return out if np.ndim(out) else float(out)


def bessel_ratio(x):
    """``A(x) = I1(x) / I0(x)`` via exponentially scaled Bessel functions."""
    x = np.asarray(x, dtype=np.float64)
    out = i1e(x) / i0e(x)
    return out if np.ndim(out) else float(out)


def approx_kappa_inverse(r, kappa_max: float = KAPPA_MAX):
    """Best & Fisher approximation to the inverse of ``bessel_ratio``.

    ``r`` is a mean resultant length; values at or above 1 saturate at
    ``kappa_max``.
    """
    r = np.asarray(r, dtype=np.float64)
    r_safe = np.clip(r, 0.0, 1.0 - 1e-15)
    low = 2 * r_safe + r_safe**3 + 5 * r_safe**5 / 6
    mid = -0.4 + 1.39 * r_safe + 0.43 / (1 - r_safe)
    with np.errstate(divide="ignore"):  # only selected for r >= 0.85
        high = 1.0 / (r_safe**3 - 4 * r_safe**2 + 3 * r_safe)
    k = np.where(r_safe < 0.53, low, np.where(r_safe < 0.85, mid, high))
    k = np.where(r >= 1.0, kappa_max, k)
    k = np.clip(k, 0.0, kappa_max)
    return k if np.ndim(k) else float(k)


@dataclass
class VonMisesMixture:
    weights: np.ndarray
    means: np.ndarray
    kappas: np.ndarray
    loglik: float = float("nan")
    n_iter: int = 0
    converged: bool = False
    history: list = field(default_factory=list)
    reinitialized: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.atleast_1d(wrap(np.asarray(self.means, dtype=np.float64)))
        self.kappas = np.asarray(self.kappas, dtype=np.float64)

    @property
    def n_components(self) -> int:
        return self.weights.size

    def component_logpdf(self, phi) -> np.ndarray:
        """``(N, C)`` log densities of each component."""
        phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
        return vm_logpdf(phi[:, None], self.means[None, :], self.kappas[None, :])

    def pdf(self, phi):
        phi = np.asarray(phi, dtype=np.float64)
        out = np.exp(logsumexp(self.component_logpdf(phi.ravel()) + np.log(self.weights), axis=1))
        return out.reshape(phi.shape) if phi.ndim else float(out[0])

    def to_record(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "means_deg": [float(np.rad2deg(m)) for m in self.means],
            "kappas": [float(k) for k in self.kappas],
            "loglik": float(self.loglik),
            "iterations": int(self.n_iter),
        }


def mixture_loglik(phi, mix: VonMisesMixture) -> float:
    """Total log-likelihood of the observations under the mixture."""
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    if phi.size == 0:
        raise ValueError("need at least one observation")
    with np.errstate(divide="ignore"):
        logw = np.log(mix.weights)
    return float(np.sum(logsumexp(mix.component_logpdf(phi) + logw, axis=1)))


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    cost: float
    reseeded: int = 0


def _kmeans_once(phi, init_idx, max_iter):
    centroids = phi[init_idx].copy()
    labels = None
    reseeded = 0
    C = centroids.size
    for _ in range(max_iter):
        sim = np.cos(phi[:, None] - centroids[None, :])
        new_labels = np.argmax(sim, axis=1)
        for c in range(C):
            if not np.any(new_labels == c):
                # re-seed at the point worst served by its current centroid
                dist = 1.0 - sim[np.arange(phi.size), new_labels]
                far = int(np.argmax(dist))
                centroids[c] = phi[far]
                new_labels[far] = c
                reseeded += 1
                sim = np.cos(phi[:, None] - centroids[None, :])
        for c in range(C):
            members = phi[new_labels == c]
            if members.size:
                centroids[c] = np.arctan2(np.sin(members).sum(), np.cos(members).sum())
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
    labels = np.argmax(np.cos(phi[:, None] - centroids[None, :]), axis=1)
    cost = float(np.sum(1.0 - np.cos(phi - centroids[labels])))
    return wrap(centroids), labels, cost, reseeded


def circular_kmeans(phi, n_clusters: int, seed=0, restarts: int = 5, max_iter: int = 100) -> KMeansResult:
    """k-means on the unit circle with cosine distance; best of seeded restarts."""
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    if phi.size < n_clusters:
        raise ValueError(f"need at least {n_clusters} observations, got {phi.size}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        init = rng.choice(phi.size, n_clusters, replace=False)
        centroids, labels, cost, reseeded = _kmeans_once(phi, init, max_iter)
        if best is None or cost < best.cost:
            best = KMeansResult(np.atleast_1d(centroids), labels, cost, reseeded)
    return best


def init_from_kmeans(phi, km: KMeansResult, kappa_max: float = KAPPA_MAX) -> VonMisesMixture:
    C = km.centroids.size
    counts = np.bincount(km.labels, minlength=C).astype(np.float64)
    kappas = np.zeros(C)
    for c in range(C):
        members = phi[km.labels == c]
        if members.size:
            r = np.hypot(np.sin(members).sum(), np.cos(members).sum()) / members.size
            kappas[c] = approx_kappa_inverse(r, kappa_max)
    return VonMisesMixture(counts / counts.sum(), km.centroids.copy(), kappas)


def _q_kappa(kappa, s, n):
    """Kappa-dependent part of a component's expected complete log-likelihood."""
    return kappa * s - n * _log_i0(kappa)


def em_fit(
    phi,
    n_components: int,
    init: VonMisesMixture | KMeansResult | None = None,
    tol: float = 1e-6,
    max_iter: int = 100,
    seed=0,
    kappa_max: float = KAPPA_MAX,
) -> VonMisesMixture:
    """Fit a von Mises mixture to angles by expectation-maximisation.

    Starts from circular k-means unless ``init`` is given. Stops when the
    log-likelihood gain drops below ``tol`` or after ``max_iter`` iterations.
    A proposed concentration that would lower the expected complete-data
    log-likelihood is rejected in favour of the current one, which keeps
    every iteration non-decreasing despite the approximate inverse.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
    N = phi.size
    C = n_components
    if N < C:
        raise ValueError(f"need at least {C} observations, got {N}")
    if init is None:
        init = circular_kmeans(phi, C, seed=seed)
    if isinstance(init, KMeansResult):
        init = init_from_kmeans(phi, init, kappa_max)
    w = init.weights.copy()
    mu = init.means.copy()
    kappa = np.clip(init.kappas.copy(), 0.0, kappa_max)
    sin_phi, cos_phi = np.sin(phi), np.cos(phi)

    def total_ll(w, mu, kappa):
        with np.errstate(divide="ignore"):
            lp = vm_logpdf(phi[:, None], mu[None, :], kappa[None, :]) + np.log(w)[None, :]
        norm = logsumexp(lp, axis=1, keepdims=True)
        return float(norm.sum()), lp - norm

    ll, log_resp = total_ll(w, mu, kappa)
    history = [ll]
    converged = False
    reinit = 0
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        gamma = np.exp(log_resp)
        nk = gamma.sum(axis=0)
        ss = gamma.T @ sin_phi
        cs = gamma.T @ cos_phi
        new_mu = np.arctan2(ss, cs)
        resultant = np.hypot(ss, cs)
        new_kappa = kappa.copy()
        for c in range(C):
            if nk[c] <= 0:
                continue
            cand = approx_kappa_inverse(resultant[c] / nk[c], kappa_max)
            if _q_kappa(cand, resultant[c], nk[c]) >= _q_kappa(kappa[c], resultant[c], nk[c]):
                new_kappa[c] = cand
        new_w = nk / N
        for c in range(C):
            if new_w[c] < WEIGHT_FLOOR:
                log.debug("component %d weight underflow; reinitialising", c)
                new_w[c] = 1.0 / C
                new_kappa[c] = 0.0
                new_mu[c] = 0.0
                reinit += 1
        new_w = new_w / new_w.sum()
        w, mu, kappa = new_w, new_mu, new_kappa
        new_ll, log_resp = total_ll(w, mu, kappa)
        history.append(new_ll)
        gain = new_ll - ll
        ll = new_ll
        if gain < tol:
            converged = True
            break
    return VonMisesMixture(
        w, mu, kappa, loglik=ll, n_iter=n_iter, converged=converged,
        history=history, reinitialized=reinit,
    )


def responsibilities(phi, mix: VonMisesMixture) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lp = mix.component_logpdf(phi) + np.log(mix.weights)[None, :]
    return np.exp(lp - logsumexp(lp, axis=1, keepdims=True))


def mask_weights(phi, mix: VonMisesMixture) -> tuple[np.ndarray, np.ndarray]:
    """Normalised component likelihoods (mixture weights ignored) per angle.

    Returns ``(beta, degenerate)`` with ``beta`` of shape ``(N, C)``.
    """
    lp = mix.component_logpdf(phi)
    degenerate = ~np.isfinite(lp).any(axis=1)
    lp = np.where(degenerate[:, None], 0.0, lp)
    beta = np.exp(lp - logsumexp(lp, axis=1, keepdims=True))
    return beta, degenerate


@dataclass
class SoftMaskSet:
    """``(K, L, C)`` mask weights; ``flagged`` marks units given a uniform mask."""

    beta: np.ndarray
    flagged: np.ndarray

    @property
    def n_components(self) -> int:
        return self.beta.shape[2]

    def to_csv(self, path, component: int) -> None:
        np.savetxt(path, self.beta[:, :, component], delimiter=",", fmt="%.9g")


def soft_masks(observations, mix: VonMisesMixture) -> SoftMaskSet:
    """Per-unit soft masks for a block; units without an observation get 1/C."""
    K, L = observations.shape
    C = mix.n_components
    beta = np.full((K, L, C), 1.0 / C)
    flagged = np.ones((K, L), dtype=bool)
    if len(observations):
        b, degenerate = mask_weights(observations.angles, mix)
        ks, ls = observations.index[:, 0], observations.index[:, 1]
        beta[ks, ls] = b
        flagged[ks, ls] = degenerate
    return SoftMaskSet(beta, flagged)


def min_kappa_component(mix: VonMisesMixture) -> int:
    """Index of the least concentrated component (lowest index on ties)."""
    return int(np.argmin(mix.kappas))


def align_components(previous_means, current_means) -> tuple[int, ...]:
    """Permutation ``p`` so that ``current[p[i]]`` continues ``previous[i]``."""
    prev = np.asarray(previous_means, dtype=np.float64)
    cur = np.asarray(current_means, dtype=np.float64)
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(cur.size)):
        cost = float(np.sum(wrap(cur[list(perm)] - prev) ** 2))
        if cost < best_cost:
            best, best_cost = perm, cost
    return tuple(best)
