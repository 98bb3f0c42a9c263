"""Reconstruction fidelity metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .numerics import as_f32


@dataclass(frozen=True)
class SsimParams:
    """Structural-similarity settings: uniform window and the usual
    stabilizing constants, with the dynamic range of the compared maps."""

    window: int = 7
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 3000.0

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise ShapeError(f"window must be odd and positive, got {self.window}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ShapeError("k1 and k2 must be positive")
        if self.dynamic_range <= 0:
            raise ShapeError(f"dynamic_range must be positive, got {self.dynamic_range}")


def ssim(a, b, params: SsimParams | None = None, dynamic_range: float | None = None) -> float:
    """Mean local structural similarity over sliding windows.

    Symmetric in its arguments, 1.0 exactly for identical inputs, and
    bounded by [-1, 1].
    """
    if params is None:
        params = SsimParams()
    if dynamic_range is not None:
        params = SsimParams(window=params.window, k1=params.k1, k2=params.k2,
                            dynamic_range=dynamic_range)
    x = as_f32(a).astype(np.float64)
    y = as_f32(b).astype(np.float64)
    if x.shape != y.shape:
        raise ShapeError(f"ssim inputs differ: {x.shape} vs {y.shape}")
    if x.ndim != 2:
        raise ShapeError(f"ssim expects 2-D maps, got {x.shape}")
    win = params.window
    if win > min(x.shape):
        raise ShapeError(f"window {win} larger than map {x.shape}")
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    wx = np.lib.stride_tricks.sliding_window_view(x, (win, win))
    wy = np.lib.stride_tricks.sliding_window_view(y, (win, win))
    mu_x = wx.mean(axis=(-2, -1))
    mu_y = wy.mean(axis=(-2, -1))
    dx = wx - mu_x[..., None, None]
    dy = wy - mu_y[..., None, None]
    var_x = (dx * dx).mean(axis=(-2, -1))
    var_y = (dy * dy).mean(axis=(-2, -1))
    cov = (dx * dy).mean(axis=(-2, -1))
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float((num / den).mean())


def loss_mae_mse(pred, gt, value_range=(1500.0, 4500.0)) -> float:
    """Equal-weight MAE + MSE over range-normalized maps."""
    p = as_f32(pred).astype(np.float64)
    g = as_f32(gt).astype(np.float64)
    if p.shape != g.shape:
        raise ShapeError(f"loss inputs differ: {p.shape} vs {g.shape}")
    lo, hi = float(value_range[0]), float(value_range[1])
    if not lo < hi:
        raise ShapeError(f"invalid value range {value_range}")
    span = hi - lo
    pn = (p - lo) / span
    gn = (g - lo) / span
    diff = pn - gn
    return float(0.5 * np.abs(diff).mean() + 0.5 * (diff * diff).mean())
