"""Quick numerical property checks run by ``activecasa selftest``."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .circular import wrap
from .localization import AzimuthObservations
from .metrics import match_streams
from .vonmises import (
    VonMisesMixture,
    approx_kappa_inverse,
    bessel_ratio,
    em_fit,
    soft_masks,
    vm_pdf,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _timed(name, fn) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


def check_vm_normalization(kappas=(0.0, 0.5, 5.0, 50.0, 500.0), tol=1e-6):
    worst = 0.0
    for k in kappas:
        area, _ = quad(lambda p: vm_pdf(p, 0.3, k), -np.pi, np.pi, points=[0.3], limit=200)
        worst = max(worst, abs(area - 1.0))
    return worst <= tol, f"max |integral - 1| = {worst:.2e}"


def _bisect_kappa(r):
    return brentq(lambda k: bessel_ratio(k) - r, 1e-12, 1e4, xtol=1e-12)


def check_kappa_inverse(tol=5e-3):
    grid = np.round(np.arange(0.01, 0.955, 0.01), 2)
    worst = 0.0
    for r in grid:
        k_hat = approx_kappa_inverse(r)
        worst = max(worst, abs(bessel_ratio(k_hat) - r))
        # bisection gives the exact inverse; the approximation must land near it
        worst = max(worst, abs(bessel_ratio(_bisect_kappa(r)) - r))
    return worst <= tol, f"max |A(k) - R| = {worst:.2e} over {grid.size} points"


def _random_mixture_data(rng, n, c):
    means = rng.uniform(-np.pi, np.pi, c)
    kappas = rng.uniform(0.5, 30.0, c)
    comp = rng.integers(0, c, n)
    return wrap(rng.vonmises(means[comp], kappas[comp]))


def check_em_monotone(n_datasets=100, n=500, seed=0, tol=-1e-9):
    worst = np.inf
    for i in range(n_datasets):
        rng = np.random.default_rng([seed, i])
        c = int(rng.integers(2, 5))
        phi = _random_mixture_data(rng, n, c)
        mix = em_fit(phi, c, seed=[seed, i])
        if len(mix.history) > 1:
            worst = min(worst, float(np.min(np.diff(mix.history))))
    worst = 0.0 if not np.isfinite(worst) else worst
    return worst >= tol, f"smallest log-likelihood step = {worst:.3e}"


def _separated_means(rng, c, min_sep):
    while True:
        mu = rng.uniform(-np.pi, np.pi, c)
        d = np.abs(wrap(mu[:, None] - mu[None, :]))[np.triu_indices(c, 1)]
        if d.min() >= min_sep:
            return mu


def check_mixture_recovery(trials=100, n=1600, kappa=20.0, seed=0, max_err_deg=5.0, need=95):
    good = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, 7, t])
        mu = _separated_means(rng, 3, np.deg2rad(60.0))
        comp = rng.integers(0, 3, n)
        phi = wrap(rng.vonmises(mu[comp], kappa))
        mix = em_fit(phi, 3, seed=[seed, t])
        perm = match_streams(mix.means, mu)
        err = np.abs(np.rad2deg(wrap(mix.means - mu[list(perm)])))
        good += int(err.max() <= max_err_deg)
    return good >= need, f"{good}/{trials} trials within {max_err_deg} deg"


def check_wrap(n=10000, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-50.0, 50.0, n)
    w = wrap(x)
    in_range = bool(np.all((w >= -np.pi) & (w < np.pi)))
    example = float(np.rad2deg(wrap(np.deg2rad(170.0) + np.deg2rad(30.0))))
    psi = rng.uniform(-np.pi, np.pi, n)
    round_trip = float(np.max(np.abs(wrap(wrap(w + psi) - psi) - w)))
    ok = in_range and abs(example + 160.0) < 1e-9 and round_trip < 1e-9
    return ok, f"range ok={in_range}, 170+30 -> {example:.6f} deg, round trip err {round_trip:.1e}"


def check_mask_normalization(cases=10000, seed=0, tol=1e-12):
    rng = np.random.default_rng(seed)
    worst = 0.0
    # batch cases sharing a mixture to keep the check fast
    per = 100
    for i in range(cases // per):
        c = int(rng.integers(1, 5))
        mix = VonMisesMixture(
            np.full(c, 1.0 / c), rng.uniform(-np.pi, np.pi, c), rng.uniform(0.0, 1e3, c)
        )
        angles = rng.uniform(-np.pi, np.pi, per)
        obs = AzimuthObservations(angles, np.stack([np.arange(per), np.zeros(per, int)], 1), (per, 1))
        beta = soft_masks(obs, mix).beta
        worst = max(worst, float(np.max(np.abs(beta.sum(axis=2) - 1.0))))
    return worst <= tol, f"max |sum beta - 1| = {worst:.1e}"


CHECKS = {
    "vm-normalization": check_vm_normalization,
    "kappa-inverse": check_kappa_inverse,
    "em-monotone": check_em_monotone,
    "mixture-recovery": check_mixture_recovery,
    "wrap": check_wrap,
    "mask-normalization": check_mask_normalization,
}


def run_checks(names=None) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    return [_timed(n, CHECKS[n]) for n in names]
