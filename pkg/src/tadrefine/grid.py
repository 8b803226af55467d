"""Temporal coordinate systems: original video time vs. the snippet axis."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TemporalGrid:
    """Binding between a video timeline and its downsampled snippet axis.

    One snippet covers ``duration_sec / num_snippets`` seconds. ``num_frames``
    is recorded when the source dump indexes time in frames; the conversion
    factor is then ``num_frames / num_snippets`` frames per snippet.
    """

    duration_sec: float
    num_snippets: int
    num_frames: int | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.duration_sec) and self.duration_sec > 0):
            raise ValueError(
                f"duration_sec must be positive and finite, got {self.duration_sec}"
            )
        if self.num_snippets < 2:
            raise ValueError(f"num_snippets must be at least 2, got {self.num_snippets}")
        if self.num_frames is not None and self.num_frames < 1:
            raise ValueError(f"num_frames must be at least 1, got {self.num_frames}")

    @property
    def lambda_sec(self) -> float:
        """Seconds covered by one snippet."""
        return self.duration_sec / self.num_snippets

    @property
    def lambda_frames(self) -> float:
        """Frames covered by one snippet (frame-indexed grids only)."""
        if self.num_frames is None:
            raise ValueError("grid is not frame-indexed: num_frames is unset")
        return self.num_frames / self.num_snippets


# Sub-snippet positions are plain floats. Snippet indices occupy
# [0, num_snippets - 1]; an interval end may sit at num_snippets exactly,
# which maps back to the video end in seconds.
SnippetCoord = float


def to_snippet(t_sec: float, grid: TemporalGrid) -> SnippetCoord:
    """Map seconds to a real-valued snippet coordinate (exact division, no rounding).

    The result is capped at ``num_snippets`` so the video end never overshoots
    the axis by floating-point round-off.
    """
    if not 0.0 <= t_sec <= grid.duration_sec:
        raise ValueError(f"time {t_sec} s outside [0, {grid.duration_sec}] for this grid")
    return min(t_sec / grid.lambda_sec, float(grid.num_snippets))


def to_seconds(x: SnippetCoord, grid: TemporalGrid) -> float:
    """Inverse of :func:`to_snippet`, capped at the video duration."""
    if not 0.0 <= x <= grid.num_snippets:
        raise ValueError(f"snippet coordinate {x} outside [0, {grid.num_snippets}]")
    return min(x * grid.lambda_sec, grid.duration_sec)
