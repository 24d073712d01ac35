"""Small angle helpers shared across modules."""
import numpy as np

TWO_PI = 2.0 * np.pi


def wrap(angle):
    """Wrap angles to [-pi, pi)."""
    a = np.mod(np.asarray(angle, dtype=np.float64) + np.pi, TWO_PI) - np.pi
    # mod can round up to exactly 2*pi for tiny negative inputs
    a = np.where(a >= np.pi, a - TWO_PI, a)
    a = np.where(a < -np.pi, -np.pi, a)
    return a if a.ndim else float(a)


def wrap_error(angle):
    """Wrap angular differences to (-pi, pi]."""
    a = -wrap(-np.asarray(angle, dtype=np.float64))
    return a if np.ndim(a) else float(a)


def circular_mean(angles, weights=None):
    angles = np.asarray(angles, dtype=np.float64)
    w = np.ones_like(angles) if weights is None else np.asarray(weights, dtype=np.float64)
    return float(np.arctan2(np.sum(w * np.sin(angles)), np.sum(w * np.cos(angles))))


def resultant_length(angles, weights=None):
    angles = np.asarray(angles, dtype=np.float64)
    w = np.ones_like(angles) if weights is None else np.asarray(weights, dtype=np.float64)
    total = np.sum(w)
    if total <= 0:
        return 0.0
    return float(np.hypot(np.sum(w * np.sin(angles)), np.sum(w * np.cos(angles))) / total)
