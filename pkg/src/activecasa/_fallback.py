"""Pure numpy/scipy versions of the compiled front-end kernels."""
import numpy as np
from scipy.signal import lfilter

ORDER = 4


def gammatone_bank(x, pole_re, pole_im, gain, phase_re, phase_im, delays):
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    out = np.zeros((len(pole_re), n), dtype=np.float64)
    for c in range(len(pole_re)):
        a = complex(pole_re[c], pole_im[c])
        y = gain[c] * x.astype(np.complex128)
        for _ in range(ORDER):
            y = lfilter([1.0], [1.0, -a], y)
        d = min(int(delays[c]), n)
        out[c, d:] = (y[: n - d] * complex(phase_re[c], phase_im[c])).real
    return out


def ihc_lowpass(x, pole):
    h = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    b = [1.0 - pole]
    a = [1.0, -pole]
    y = lfilter(b, a, lfilter(b, a, h, axis=1), axis=1)
    return np.maximum(y, 0.0)


def ratemap_frames(x, pole, frame_len, start, n_frames):
    x = np.asarray(x, dtype=np.float64)
    stop = start + frame_len * n_frames
    y = lfilter([1.0 - pole], [1.0, -pole], x[:, :stop], axis=1)[:, start:]
    return y.reshape(x.shape[0], n_frames, frame_len).mean(axis=2)


def _lag_order(max_lag):
    order = [0]
    for d in range(1, max_lag + 1):
        order += [d, -d]
    return np.array(order)


def xcorr_lags(left, right, frame_len, start, n_frames, max_lag):
    nch = left.shape[0]
    stop = start + frame_len * n_frames
    lf = left[:, start:stop].reshape(nch, n_frames, frame_len)
    rf = right[:, start:stop].reshape(nch, n_frames, frame_len)
    lf = lf - lf.mean(axis=2, keepdims=True)
    rf = rf - rf.mean(axis=2, keepdims=True)
    nfft = 1 << int(np.ceil(np.log2(frame_len + max_lag + 1)))
    spec = np.conj(np.fft.rfft(lf, nfft, axis=2)) * np.fft.rfft(rf, nfft, axis=2)
    cc = np.fft.irfft(spec, nfft, axis=2)
    order = _lag_order(max_lag)
    cand = cc[:, :, order % nfft]
    pick = np.argmax(cand, axis=2)
    lags = order[pick].astype(np.int64)
    best = np.take_along_axis(cand, pick[..., None], axis=2)[..., 0]
    norm = np.sqrt((lf ** 2).sum(axis=2) * (rf ** 2).sum(axis=2))
    peaks = np.divide(best, norm, out=np.zeros_like(best), where=norm > 0)
    return lags, peaks
