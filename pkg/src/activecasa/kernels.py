"""Front-end kernel dispatch.

The compiled extension is used when it imports; otherwise the numpy/scipy
fallback is used. Set ``ACTIVECASA_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("ACTIVECASA_PURE", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

gammatone_bank = _impl.gammatone_bank
ihc_lowpass = _impl.ihc_lowpass
ratemap_frames = _impl.ratemap_frames
xcorr_lags = _impl.xcorr_lags

__all__ = ["BACKEND", "gammatone_bank", "ihc_lowpass", "ratemap_frames", "xcorr_lags"]
