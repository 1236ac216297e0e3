"""Sliding-window correlation kernels used by the regulator and trackers.

Two primitives: plain per-channel valid cross-correlation, and a
zero-normalized score map that treats the whole multi-channel kernel as
one vector (scores in [-1, 1]). Small problems run a direct windowed
product; large single-channel ones go through FFT convolution with
integral-image window statistics.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import fftconvolve

# Above this many multiply-adds the FFT path wins over the direct one.
_DIRECT_OP_LIMIT = 2_000_000


def valid_correlate_per_channel(cand: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Per-channel valid cross-correlation of (C, H, W) maps.

    `ref` slides over `cand`; output is (C, H - h + 1, W - w + 1).
    """
    if cand.ndim != 3 or ref.ndim != 3:
        raise ValueError("expected planar (C, H, W) arrays")
    if cand.shape[0] != ref.shape[0]:
        raise ValueError(f"channel mismatch: {cand.shape[0]} vs {ref.shape[0]}")
    if ref.shape[1] > cand.shape[1] or ref.shape[2] > cand.shape[2]:
        raise ValueError(f"kernel {ref.shape} larger than input {cand.shape}")
    windows = sliding_window_view(cand, ref.shape[1:], axis=(1, 2))
    return np.einsum("cijhw,chw->cij", windows, ref, optimize=True)


def _window_sums(plane: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Sum of every kh x kw window of a 2-D plane via an integral image."""
    integral = np.zeros((plane.shape[0] + 1, plane.shape[1] + 1), dtype=np.float64)
    np.cumsum(plane, axis=0, out=integral[1:, 1:])
    np.cumsum(integral[1:, 1:], axis=1, out=integral[1:, 1:])
    return (
        integral[kh:, kw:]
        - integral[:-kh, kw:]
        - integral[kh:, :-kw]
        + integral[:-kh, :-kw]
    )


def zncc_score_map(cand: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Zero-normalized cross-correlation of a multi-channel kernel.

    Both inputs are planar (C, H, W). Kernel and candidate windows are
    centered per channel, so channel-level offsets shared by all windows
    carry no evidence; only within-channel spatial structure correlates.
    Windows with (near) zero variance score 0. Output is 2-D in [-1, 1].
    """
    if cand.shape[0] != ref.shape[0]:
        raise ValueError(f"channel mismatch: {cand.shape[0]} vs {ref.shape[0]}")
    if ref.shape[1] > cand.shape[1] or ref.shape[2] > cand.shape[2]:
        raise ValueError(f"kernel {ref.shape} larger than input {cand.shape}")
    cand = np.ascontiguousarray(cand, dtype=np.float64)
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    kh, kw = ref.shape[1:]
    cells = kh * kw

    centered = ref - ref.mean(axis=(1, 2), keepdims=True)
    ref_norm = float(np.sqrt((centered**2).sum()))

    out_h = cand.shape[1] - kh + 1
    out_w = cand.shape[2] - kw + 1
    cost = out_h * out_w * ref.size
    if cost <= _DIRECT_OP_LIMIT:
        windows = sliding_window_view(cand, (kh, kw), axis=(1, 2))
        num = np.einsum("cijhw,chw->ij", windows, centered, optimize=True)
    else:
        num = np.zeros((out_h, out_w), dtype=np.float64)
        for c in range(cand.shape[0]):
            num += fftconvolve(cand[c], centered[c, ::-1, ::-1], mode="valid")

    # The per-channel window means cancel against the centered kernel, so
    # only the per-channel window variances are needed for normalization.
    var = np.zeros((out_h, out_w), dtype=np.float64)
    energy = np.zeros((out_h, out_w), dtype=np.float64)
    for c in range(cand.shape[0]):
        sum1 = _window_sums(cand[c], kh, kw)
        sum2 = _window_sums(cand[c] ** 2, kh, kw)
        var += np.maximum(sum2 - sum1**2 / cells, 0.0)
        energy += sum2
    # Windows whose variance is at roundoff scale relative to their energy
    # are flat; so is a flat kernel.
    flat = var <= 1e-12 * energy
    denom = ref_norm * np.sqrt(np.where(flat, 1.0, var))

    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(flat | (denom <= 0.0), 0.0, num / np.where(denom > 0.0, denom, 1.0))
    return np.clip(scores, -1.0, 1.0)
