"""Batch refinement of detector prediction dumps, resolution recovery, Soft-NMS."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import TemporalGrid, to_seconds
from .refine import RefinementConfig, ScoreCurve, refine_many

logger = logging.getLogger(__name__)


@dataclass
class Proposal:
    """One candidate action instance in snippet coordinates."""

    start: float
    end: float
    score: float
    label: str | int
    start_refined: bool = False
    end_refined: bool = False
    reverted: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError("proposal boundaries must be finite")
        if self.start >= self.end:
            raise ValueError(f"proposal must satisfy start < end, got ({self.start}, {self.end})")
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass
class VideoPredictions:
    """One video's dump: grid, optional boundary curves, and proposals."""

    video_id: str
    grid: TemporalGrid
    start_curve: ScoreCurve | None = None
    end_curve: ScoreCurve | None = None
    proposals: list[Proposal] = field(default_factory=list)

    def __post_init__(self) -> None:
        for curve in (self.start_curve, self.end_curve):
            if curve is not None and len(curve) != self.grid.num_snippets:
                raise ValueError(
                    f"video {self.video_id!r}: curve length {len(curve)} does not match "
                    f"num_snippets {self.grid.num_snippets}"
                )


def refine_proposals(video: VideoPredictions, cfg: RefinementConfig) -> VideoPredictions:
    """Refine every proposal's endpoints against the video's boundary curves.

    Starts are refined on the start curve, ends on the end curve; scores and
    labels are untouched and proposal order is preserved. A refinement that
    would cross the endpoints (start >= end) reverts the proposal and flags it.
    Videos without curves pass through unchanged with a warning.
    """
    if video.start_curve is None or video.end_curve is None:
        logger.warning(
            "video %s carries no boundary curves; proposals passed through unrefined",
            video.video_id,
        )
        return video
    if not video.proposals:
        return video

    starts = np.array([p.start for p in video.proposals], dtype=np.float64)
    ends = np.array([p.end for p in video.proposals], dtype=np.float64)
    new_starts, start_ok = refine_many(video.start_curve.values, starts, cfg)
    new_ends, end_ok = refine_many(video.end_curve.values, ends, cfg)

    refined = []
    for p, ns, so, ne, eo in zip(video.proposals, new_starts, start_ok, new_ends, end_ok):
        if ns >= ne:
            refined.append(replace(p, reverted=True))
        else:
            refined.append(
                replace(
                    p,
                    start=float(ns),
                    end=float(ne),
                    start_refined=bool(so),
                    end_refined=bool(eo),
                )
            )
    return replace(video, proposals=refined)


def recover_resolution(video: VideoPredictions) -> list[tuple[float, float, float, str | int]]:
    """Map proposals back to seconds, sorted by descending score.

    Ties break on start then end time so the output order is deterministic.
    """
    rows = [
        (
            to_seconds(p.start, video.grid),
            to_seconds(p.end, video.grid),
            p.score,
            p.label,
        )
        for p in video.proposals
    ]
    rows.sort(key=lambda r: (-r[2], r[0], r[1]))
    return rows


def soft_nms(
    proposals: list[Proposal],
    sigma_nms: float = 0.5,
    score_floor: float = 1e-4,
    top_k: int = 100,
) -> list[Proposal]:
    """Gaussian Soft-NMS restricted to same-label suppression.

    Greedily selects the highest-scoring proposal (ties: earlier start, then
    earlier end) and decays every remaining proposal of the same label by
    ``exp(-tIoU^2 / sigma_nms)``. Proposals falling below ``score_floor`` are
    dropped; at most ``top_k`` survive. Output scores never exceed the inputs.
    """
    if sigma_nms <= 0:
        raise ValueError(f"sigma_nms must be positive, got {sigma_nms}")
    if not proposals:
        return []

    starts = np.array([p.start for p in proposals], dtype=np.float64)
    ends = np.array([p.end for p in proposals], dtype=np.float64)
    scores = np.array([p.score for p in proposals], dtype=np.float64)
    label_codes: dict[str | int, int] = {}
    codes = np.array([label_codes.setdefault(p.label, len(label_codes)) for p in proposals])

    alive = scores >= score_floor
    selected: list[tuple[int, float]] = []
    while len(selected) < top_k and alive.any():
        masked = np.where(alive, scores, -np.inf)
        best = masked.max()
        candidates = np.nonzero(masked == best)[0]
        i = int(candidates[np.lexsort((ends[candidates], starts[candidates]))[0]])
        selected.append((i, float(scores[i])))
        alive[i] = False

        same = alive & (codes == codes[i])
        if same.any():
            inter = np.minimum(ends[same], ends[i]) - np.maximum(starts[same], starts[i])
            inter = np.clip(inter, 0.0, None)
            union = (ends[same] - starts[same]) + (ends[i] - starts[i]) - inter
            iou = inter / union
            scores[same] = scores[same] * np.exp(-(iou * iou) / sigma_nms)
            alive &= scores >= score_floor

    return [replace(proposals[i], score=s) for i, s in selected]
