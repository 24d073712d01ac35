# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the auditory front-end.

Every function here has a numpy/scipy twin in ``_fallback.py`` with the same
signature; ``kernels.py`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def gammatone_bank(const double[::1] x, const double[::1] pole_re,
                   const double[::1] pole_im, const double[::1] gain,
                   const double[::1] phase_re, const double[::1] phase_im,
                   const cnp.int64_t[::1] delays):
    """Run a bank of 4th-order complex gammatone cascades over ``x``.

    Returns the real part of each channel's complex output after
    multiplication by the unit phase factor ``phase_re + 1j*phase_im``,
    delayed by ``delays[c]`` samples (zero-filled at the start).
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nch = pole_re.shape[0]
    out_arr = np.empty((nch, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t c, i, d
    cdef double ar, ai, g, pr, pi, u
    cdef double s1r, s1i, s2r, s2i, s3r, s3i, s4r, s4i, tr, ti
    with nogil:
        for c in range(nch):
            ar = pole_re[c]
            ai = pole_im[c]
            g = gain[c]
            pr = phase_re[c]
            pi = phase_im[c]
            d = delays[c]
            if d > n:
                d = n
            for i in range(d):
                out[c, i] = 0.0
            s1r = s1i = s2r = s2i = s3r = s3i = s4r = s4i = 0.0
            for i in range(n - d):
                u = g * x[i]
                tr = u + ar * s1r - ai * s1i
                ti = ai * s1r + ar * s1i
                s1r = tr
                s1i = ti
                tr = s1r + ar * s2r - ai * s2i
                ti = s1i + ai * s2r + ar * s2i
                s2r = tr
                s2i = ti
                tr = s2r + ar * s3r - ai * s3i
                ti = s2i + ai * s3r + ar * s3i
                s3r = tr
                s3i = ti
                tr = s3r + ar * s4r - ai * s4i
                ti = s3i + ai * s4r + ar * s4i
                s4r = tr
                s4i = ti
                out[c, i + d] = s4r * pr - s4i * pi
    return out_arr


def ihc_lowpass(const double[:, ::1] x, double pole):
    """Half-wave rectify, then two cascaded unity-DC one-pole low-passes."""
    cdef Py_ssize_t nch = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    out_arr = np.empty((nch, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double b = 1.0 - pole
    cdef double h, y1, y2
    cdef Py_ssize_t c, i
    with nogil:
        for c in range(nch):
            y1 = 0.0
            y2 = 0.0
            for i in range(n):
                h = x[c, i]
                if h < 0.0:
                    h = 0.0
                y1 = b * h + pole * y1
                y2 = b * y1 + pole * y2
                out[c, i] = y2
    return out_arr


def ratemap_frames(const double[:, ::1] x, double pole, Py_ssize_t frame_len,
                   Py_ssize_t start, Py_ssize_t n_frames):
    """Leaky-integrate each row and return per-frame means from ``start``."""
    cdef Py_ssize_t nch = x.shape[0]
    out_arr = np.zeros((nch, n_frames), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double b = 1.0 - pole
    cdef double y, acc
    cdef Py_ssize_t c, i, f, stop = start + frame_len * n_frames
    with nogil:
        for c in range(nch):
            y = 0.0
            for i in range(start):
                y = b * x[c, i] + pole * y
            for f in range(n_frames):
                acc = 0.0
                for i in range(start + f * frame_len, start + (f + 1) * frame_len):
                    y = b * x[c, i] + pole * y
                    acc = acc + y
                out[c, f] = acc / frame_len
    return out_arr


def xcorr_lags(const double[:, ::1] left, const double[:, ::1] right,
               Py_ssize_t frame_len, Py_ssize_t start, Py_ssize_t n_frames,
               Py_ssize_t max_lag):
    """Per-frame argmax lag of the mean-removed interaural cross-correlation.

    Positive lag means ``right`` is a delayed copy of ``left``. Lags are
    visited in the order 0, +1, -1, +2, -2, ... and only a strictly larger
    value replaces the incumbent, so ties resolve to the smallest |lag|.
    Returns ``(lags, peaks)`` with peaks normalised by the frame energies.
    """
    cdef Py_ssize_t nch = left.shape[0]
    lags_arr = np.zeros((nch, n_frames), dtype=np.int64)
    peaks_arr = np.zeros((nch, n_frames), dtype=np.float64)
    cdef cnp.int64_t[:, ::1] lags = lags_arr
    cdef double[:, ::1] peaks = peaks_arr
    buf_arr = np.empty((2, frame_len), dtype=np.float64)
    cdef double[:, ::1] buf = buf_arr
    acc_arr = np.empty(2 * max_lag + 1, dtype=np.float64)
    cdef double[::1] acc = acc_arr
    cdef Py_ssize_t c, f, i, j, k, lag, lo, hi, off
    cdef double ml, mr, el, er, s, best, norm
    cdef Py_ssize_t best_lag
    cdef double* pa = &acc[0]
    cdef double* pr
    with nogil:
        for c in range(nch):
            for f in range(n_frames):
                off = start + f * frame_len
                ml = 0.0
                mr = 0.0
                for i in range(frame_len):
                    ml = ml + left[c, off + i]
                    mr = mr + right[c, off + i]
                ml = ml / frame_len
                mr = mr / frame_len
                el = 0.0
                er = 0.0
                for i in range(frame_len):
                    buf[0, i] = left[c, off + i] - ml
                    buf[1, i] = right[c, off + i] - mr
                    el = el + buf[0, i] * buf[0, i]
                    er = er + buf[1, i] * buf[1, i]
                norm = sqrt(el * er)
                for k in range(2 * max_lag + 1):
                    acc[k] = 0.0
                # acc[k] holds lag k - max_lag
                for j in range(frame_len):
                    s = buf[0, j]
                    pr = &buf[1, 0] + j - max_lag
                    lo = max_lag - j if j < max_lag else 0
                    hi = frame_len - 1 - j + max_lag
                    if hi > 2 * max_lag:
                        hi = 2 * max_lag
                    for k in range(lo, hi + 1):
                        pa[k] = pa[k] + s * pr[k]
                best = acc[max_lag]
                best_lag = 0
                for lag in range(1, max_lag + 1):
                    if acc[max_lag + lag] > best:
                        best = acc[max_lag + lag]
                        best_lag = lag
                    if acc[max_lag - lag] > best:
                        best = acc[max_lag - lag]
                        best_lag = -lag
                lags[c, f] = best_lag
                if norm > 0.0:
                    peaks[c, f] = best / norm
                else:
                    peaks[c, f] = 0.0
    return lags_arr, peaks_arr
