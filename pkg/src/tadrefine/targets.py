"""Ground-truth downsampling, quantization, and boundary-target synthesis.

Annotated boundaries live in seconds; training targets live on the snippet
grid. The conventional path quantizes the downsampled boundary to an integer
snippet before placing a Gaussian bump there, which bakes a sub-snippet error
into the target. The calibrated variant keeps the continuous center instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import TemporalGrid, to_snippet
from .refine import QUANTIZE_MODES

# exp() underflows to 0 near -745; clipping the exponent keeps far taps positive
_MIN_EXPONENT = -700.0


@dataclass(frozen=True)
class GroundTruthInstance:
    """One annotated action interval, in seconds."""

    start_sec: float
    end_sec: float
    label: str | int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start_sec) and math.isfinite(self.end_sec)):
            raise ValueError("instance boundaries must be finite")
        if not 0 <= self.start_sec < self.end_sec:
            raise ValueError(
                f"instance must satisfy 0 <= start < end, got ({self.start_sec}, {self.end_sec})"
            )


@dataclass
class BoundaryHeatmap:
    """Peak-normalized Gaussian scores over the snippet axis."""

    values: np.ndarray
    center: float
    sigma: float


def downsample_gt(gt: GroundTruthInstance, grid: TemporalGrid) -> tuple[float, float]:
    """Map an annotated interval to real-valued snippet coordinates, no rounding."""
    return to_snippet(gt.start_sec, grid), to_snippet(gt.end_sec, grid)


def quantize_point(value: float, mode: str) -> int:
    """floor / ceil / round a snippet coordinate; round ties go away from zero."""
    if value < 0:
        raise ValueError(f"coordinate must be non-negative, got {value}")
    if mode == "floor":
        return int(math.floor(value))
    if mode == "ceil":
        return int(math.ceil(value))
    if mode == "round":
        return int(math.floor(value + 0.5))
    raise ValueError(f"quantize mode must be one of {QUANTIZE_MODES}, got {mode!r}")


def synthesize_heatmap(center: float, num_snippets: int, sigma: float) -> BoundaryHeatmap:
    """Gaussian bump ``exp(-(x - center)^2 / 2 sigma^2)`` sampled at integer snippets.

    Normalized by the continuous peak, so the largest tap is <= 1 and equals 1
    exactly when ``center`` is an integer.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 0 <= center <= num_snippets - 1:
        raise ValueError(f"center {center} outside snippet range [0, {num_snippets - 1}]")
    x = np.arange(num_snippets, dtype=np.float64)
    exponent = np.maximum(-((x - center) ** 2) / (2.0 * sigma * sigma), _MIN_EXPONENT)
    return BoundaryHeatmap(values=np.exp(exponent), center=float(center), sigma=float(sigma))


def make_training_targets(
    gt: GroundTruthInstance,
    grid: TemporalGrid,
    sigma: float,
    calibrated: bool = True,
    mode: str = "floor",
) -> tuple[BoundaryHeatmap, BoundaryHeatmap]:
    """Start/end heatmaps for one instance.

    Calibrated targets center the bumps at the continuous downsampled
    boundaries; uncalibrated targets quantize them first, leaving a per-endpoint
    error equal to the quantization offset. Centers are clamped to the last
    snippet so full-extent instances stay representable.
    """
    if gt.end_sec > grid.duration_sec:
        raise ValueError(
            f"instance end {gt.end_sec} s exceeds video duration {grid.duration_sec} s"
        )
    start, end = downsample_gt(gt, grid)
    if not calibrated:
        start = float(quantize_point(start, mode))
        end = float(quantize_point(end, mode))
    top = float(grid.num_snippets - 1)
    start = min(max(start, 0.0), top)
    end = min(max(end, 0.0), top)
    return (
        synthesize_heatmap(start, grid.num_snippets, sigma),
        synthesize_heatmap(end, grid.num_snippets, sigma),
    )
