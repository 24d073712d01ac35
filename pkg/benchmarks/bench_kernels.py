"""Compare the compiled front-end kernels with the numpy/scipy fallback.

Run with ``python benchmarks/bench_kernels.py [--seconds 2]``.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from activecasa import _fallback
from activecasa.frontend import FrontendConfig, design_filterbank, ihc_pole, ratemap_pole

try:
    from activecasa import _kernels
except ImportError:  # extension not built
    _kernels = None


def _cases(seconds: float):
    cfg = FrontendConfig()
    bank = design_filterbank(cfg)
    x = np.random.default_rng(0).standard_normal(int(seconds * cfg.sample_rate))
    gt_args = (
        x, np.ascontiguousarray(bank.poles.real), np.ascontiguousarray(bank.poles.imag), bank.gains,
        np.ascontiguousarray(bank.phase.real), np.ascontiguousarray(bank.phase.imag),
        np.ascontiguousarray(bank.delays, dtype=np.int64),
    )
    y = _fallback.gammatone_bank(*gt_args)
    ihc = _fallback.ihc_lowpass(y, ihc_pole(cfg))
    fl = cfg.frame_samples
    n_frames = ihc.shape[1] // fl
    right = np.ascontiguousarray(np.roll(ihc, 5, axis=1))
    return {
        "gammatone_bank": gt_args,
        "ihc_lowpass": (y, ihc_pole(cfg)),
        "ratemap_frames": (ihc, ratemap_pole(cfg), fl, 0, n_frames),
        "xcorr_lags": (ihc, right, fl, 0, n_frames, cfg.max_lag),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seconds", type=float, default=2.0, help="signal length per call")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cases = _cases(args.seconds)
    print(f"{'kernel':<16} {'python (s)':>11} {'cython (s)':>11} {'speed-up':>9}")
    for name, call_args in cases.items():
        py = min(timeit.repeat(lambda: getattr(_fallback, name)(*call_args), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:<16} {py:>11.4f} {'n/a':>11} {'n/a':>9}")
            continue
        cy = min(timeit.repeat(lambda: getattr(_kernels, name)(*call_args), number=1, repeat=args.repeat))
        print(f"{name:<16} {py:>11.4f} {cy:>11.4f} {py / cy:>8.1f}x")


if __name__ == "__main__":
    main()
