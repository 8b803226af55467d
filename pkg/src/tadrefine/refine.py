"""Sub-snippet boundary refinement on 1-D score curves.

A boundary predicted at integer snippet resolution is pushed to continuous
resolution by treating the local score mass as a Gaussian bump: the curve is
optionally smoothed, log-transformed so the bump becomes quadratic, and the
mode is solved from discrete first and second derivatives at the peak,
``mu = x - D'(x) / D''(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

BOUNDARY_KINDS = ("start", "end")
QUANTIZE_MODES = ("floor", "ceil", "round")


@dataclass
class ScoreCurve:
    """Per-snippet scores for one boundary type (action start or end)."""

    values: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.kind not in BOUNDARY_KINDS:
            raise ValueError(f"kind must be one of {BOUNDARY_KINDS}, got {self.kind!r}")
        if self.values.ndim != 1 or self.values.size < 3:
            raise ValueError(f"curve must be 1-D with at least 3 points, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("curve values must be finite")
        if np.any(self.values < 0):
            raise ValueError("curve values must be non-negative")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class GaussianKernel:
    """Normalized discrete Gaussian taps, symmetric around the center."""

    sigma: float
    radius: int
    weights: np.ndarray


@dataclass
class RefinementConfig:
    """All free knobs of the refinement pipeline in one place."""

    sigma: float = 1.0            # smoothing kernel width, snippet units
    log_floor: float = 1e-10      # guards ln() against zero scores
    max_offset: float = 0.5       # sub-snippet correction cap, snippet units
    snap_window: int = 2          # peak search half-width around the proposal index
    smoothing_enabled: bool = True
    quantize_mode: str = "floor"  # convention applied when synthesizing targets

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.log_floor <= 0:
            raise ValueError(f"log_floor must be positive, got {self.log_floor}")
        if self.max_offset <= 0:
            raise ValueError(f"max_offset must be positive, got {self.max_offset}")
        if self.snap_window < 0:
            raise ValueError(f"snap_window must be non-negative, got {self.snap_window}")
        if self.quantize_mode not in QUANTIZE_MODES:
            raise ValueError(f"quantize_mode must be one of {QUANTIZE_MODES}, got {self.quantize_mode!r}")


class RefineResult(NamedTuple):
    """Refined position plus whether refinement actually took place."""

    position: float
    refined: bool


def build_kernel(sigma: float, radius: int | None = None) -> GaussianKernel:
    """Discrete Gaussian taps ``exp(-k^2 / 2 sigma^2)`` for k in [-radius, radius].

    The default radius is ``ceil(3 * sigma)``; weights are normalized to sum 1.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if radius is None:
        radius = max(1, math.ceil(3.0 * sigma))
    if radius < 1:
        raise ValueError(f"radius must be at least 1, got {radius}")
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return GaussianKernel(sigma=float(sigma), radius=int(radius), weights=w / w.sum())


def smooth_and_rescale(values: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    """Convolve with the kernel (edge replication) and rescale to the input peak.

    The smoothed curve is mapped linearly so its minimum is 0 and its maximum
    equals ``max(values)``. A flat curve is returned unchanged.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 3:
        raise ValueError(f"curve must be 1-D with at least 3 points, got shape {v.shape}")
    padded = np.pad(v, kernel.radius, mode="edge")
    sm = np.convolve(padded, kernel.weights, mode="valid")
    lo = sm.min()
    hi = sm.max()
    if hi == lo:
        return v.copy()
    return (sm - lo) / (hi - lo) * v.max()


def log_transform(values: np.ndarray, log_floor: float = 1e-10) -> np.ndarray:
    """Elementwise ``ln(max(value, log_floor))``; preserves the argmax location."""
    if log_floor <= 0:
        raise ValueError(f"log_floor must be positive, got {log_floor}")
    return np.log(np.maximum(np.asarray(values, dtype=np.float64), log_floor))


def taylor_refine(log_values: np.ndarray, x: int, max_offset: float = 0.5) -> RefineResult:
    """Solve the sub-snippet mode of a log-domain curve around the peak index ``x``.

    Central differences estimate the first and second derivative; the mode of
    the local quadratic is ``x - D'(x) / D''(x)``, exact whenever the log curve
    is a quadratic. The offset is clamped to ``[-max_offset, max_offset]``.
    A non-concave neighborhood (``D'' >= 0``) yields no refinement.
    """
    g = np.asarray(log_values, dtype=np.float64)
    if not 1 <= x <= g.size - 2:
        raise ValueError(f"index {x} has no interior 3-tap stencil on a curve of length {g.size}")
    d1 = 0.5 * (g[x + 1] - g[x - 1])
    d2 = g[x + 1] + g[x - 1] - 2.0 * g[x]
    if d2 >= 0:
        return RefineResult(float(x), False)
    offset = float(np.clip(-d1 / d2, -max_offset, max_offset))
    return RefineResult(x + offset, True)


def refine_boundary(values: np.ndarray, x_init: float, cfg: RefinementConfig) -> RefineResult:
    """Full single-boundary path: smooth, snap to the local peak, refine, clamp.

    The peak is the curve argmax within ``snap_window`` snippets of
    ``round(x_init)``. When the peak lands on the curve edge or its
    neighborhood is not concave, ``x_init`` is returned unrefined so the
    caller can fall back to the unprocessed prediction.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 3:
        raise ValueError(f"curve must be 1-D with at least 3 points, got shape {v.shape}")
    if cfg.smoothing_enabled:
        v = smooth_and_rescale(v, build_kernel(cfg.sigma))
    x = _snap_to_peak(v, x_init, cfg.snap_window)
    if x <= 0 or x >= v.size - 1:
        return RefineResult(float(x_init), False)
    g = log_transform(v, cfg.log_floor)
    result = taylor_refine(g, x, cfg.max_offset)
    if not result.refined:
        return RefineResult(float(x_init), False)
    return RefineResult(float(np.clip(result.position, 0.0, v.size - 1.0)), True)


def refine_many(values: np.ndarray, x_inits: np.ndarray, cfg: RefinementConfig) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`refine_boundary` for many boundaries on one curve.

    Returns ``(positions, refined)`` arrays; unrefined entries carry their
    input position. Results match the scalar path exactly.
    """
    xs = np.asarray(x_inits, dtype=np.float64)
    if xs.size == 0:
        return np.empty(0), np.empty(0, dtype=bool)
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 3:
        raise ValueError(f"curve must be 1-D with at least 3 points, got shape {v.shape}")
    if cfg.smoothing_enabled:
        v = smooth_and_rescale(v, build_kernel(cfg.sigma))
    g = log_transform(v, cfg.log_floor)
    n = v.size

    base = np.clip(np.floor(xs + 0.5).astype(np.int64), 0, n - 1)
    offsets = np.arange(-cfg.snap_window, cfg.snap_window + 1)
    window = np.clip(base[:, None] + offsets[None, :], 0, n - 1)
    x = window[np.arange(xs.size), np.argmax(v[window], axis=1)]

    interior = (x > 0) & (x < n - 1)
    xl = np.clip(x - 1, 0, n - 1)
    xr = np.clip(x + 1, 0, n - 1)
    d1 = 0.5 * (g[xr] - g[xl])
    d2 = g[xr] + g[xl] - 2.0 * g[x]
    ok = interior & (d2 < 0)

    positions = xs.copy()
    offs = np.clip(-d1[ok] / d2[ok], -cfg.max_offset, cfg.max_offset)
    positions[ok] = np.clip(x[ok] + offs, 0.0, n - 1.0)
    return positions, ok


def _snap_to_peak(values: np.ndarray, x_init: float, window: int) -> int:
    # Half-up rounding, consistent with the "round" quantizer on coordinates >= 0.
    xi = int(math.floor(x_init + 0.5))
    xi = min(max(xi, 0), values.size - 1)
    lo = max(0, xi - window)
    hi = min(values.size - 1, xi + window)
    return lo + int(np.argmax(values[lo : hi + 1]))
