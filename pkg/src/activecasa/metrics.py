"""Scoring: circular RMSE, stream-to-source matching, classification error."""
from __future__ import annotations

import itertools

import numpy as np

from .circular import wrap, wrap_error


def circular_rmse(estimates, truths) -> float:
    """Root-mean-square wrapped angular error, in degrees, of matched pairs (radians in)."""
    est = np.atleast_1d(np.asarray(estimates, dtype=np.float64))
    tru = np.atleast_1d(np.asarray(truths, dtype=np.float64))
    if est.size == 0:
        raise ValueError("circular_rmse needs at least one pair")
    if est.shape != tru.shape:
        raise ValueError("estimates and truths must have the same shape")
    err = wrap_error(est - tru)
    return float(np.rad2deg(np.sqrt(np.mean(np.square(err)))))


def match_streams(estimates, truths) -> tuple[int, ...]:
    """Assignment ``p`` (estimate ``i`` -> truth ``p[i]``) minimising summed squared wrapped error.

    Brute force over permutations in lexicographic order; the first minimum wins.
    """
    est = np.asarray(estimates, dtype=np.float64)
    tru = np.asarray(truths, dtype=np.float64)
    if est.size != tru.size:
        raise ValueError("estimates and truths must have equal counts")
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(tru.size)):
        cost = float(np.sum(wrap_error(est - tru[list(perm)]) ** 2))
        if cost < best_cost:
            best, best_cost = perm, cost
    return tuple(best)


def classification_error_rate(decisions) -> float:
    """Percentage of ``(predicted, truth)`` pairs that are wrong; ``None`` predictions count as wrong."""
    decisions = list(decisions)
    if not decisions:
        raise ValueError("classification_error_rate needs at least one decision")
    wrong = sum(1 for pred, truth in decisions if pred is None or pred != truth)
    return 100.0 * wrong / len(decisions)


def wrapped_errors(estimates, truths) -> np.ndarray:
    return np.asarray(wrap(np.asarray(estimates) - np.asarray(truths)))
