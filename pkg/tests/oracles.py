"""Reference computations written independently of the package under test."""
import itertools
import math

import numpy as np


def bessel_i(order: int, x: float, terms: int = 80) -> float:
    """Modified Bessel function of the first kind by its power series."""
    total = 0.0
    for m in range(terms):
        total += (x / 2.0) ** (2 * m + order) / (math.factorial(m) * math.factorial(m + order))
    return total


def vm_density(phi, mu, kappa):
    return math.exp(kappa * math.cos(phi - mu)) / (2.0 * math.pi * bessel_i(0, kappa))


def mixture_loglik_naive(phi, weights, means, kappas):
    total = 0.0
    for p in phi:
        total += math.log(sum(w * vm_density(p, m, k) for w, m, k in zip(weights, means, kappas)))
    return total


def bisect_increasing(fn, target, lo, hi, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def angle_diff(a, b):
    """Wrapped difference in (-pi, pi]."""
    d = math.fmod(a - b, 2 * math.pi)
    if d > math.pi:
        d -= 2 * math.pi
    if d <= -math.pi:
        d += 2 * math.pi
    return d


def brute_force_assignment_cost(est, truth):
    best = math.inf
    for perm in itertools.permutations(range(len(truth))):
        best = min(best, sum(angle_diff(e, truth[p]) ** 2 for e, p in zip(est, perm)))
    return best


def erb_rate(f):
    return 21.4 * math.log10(4.37e-3 * f + 1.0)


def erb_rate_inverse(e):
    return (10 ** (e / 21.4) - 1.0) / 4.37e-3


def one_pole_lowpass_mag(pole, f, fs):
    """|H| of y[n] = (1-p) x[n] + p y[n-1] at frequency f."""
    w = 2 * math.pi * f / fs
    return (1 - pole) / abs(1 - pole * complex(math.cos(w), -math.sin(w)))


def lag_of_max_xcorr(a, b, max_lag):
    """Lag (samples) maximising sum_n a[n] b[n + lag] by direct search."""
    a = np.asarray(a) - np.mean(a)
    b = np.asarray(b) - np.mean(b)
    best, best_val = 0, -np.inf
    n = len(a)
    for lag in range(-max_lag, max_lag + 1):
        if lag >= 0:
            v = float(np.dot(a[: n - lag], b[lag:]))
        else:
            v = float(np.dot(a[-lag:], b[: n + lag]))
        if v > best_val + 1e-12 or (abs(v - best_val) <= 1e-12 and abs(lag) < abs(best)):
            best, best_val = lag, v
    return best
