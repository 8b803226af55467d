"""Detection metrics: temporal IoU, mean average precision, boundary error, FP profile.

Predictions are per-video lists of ``(start_sec, end_sec, score, label)``
tuples; ground truth is a per-video list of :class:`GroundTruthInstance`.
Matching follows the public benchmark convention: predictions sorted by score,
each greedily taking the unmatched same-class ground truth with the highest
tIoU above the threshold, and AP computed as the area under the precision
envelope (all-point interpolation).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .targets import GroundTruthInstance

logger = logging.getLogger(__name__)

Interval = tuple[float, float]
PredRow = tuple[float, float, float, object]

ANET_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
THUMOS_THRESHOLDS = (0.3, 0.4, 0.5, 0.6, 0.7)

# below this overlap a false positive counts as background rather than
# a localization error
BACKGROUND_TIOU = 0.1


@dataclass
class EvalReport:
    """mAP per tIoU threshold plus the derived summary numbers."""

    per_threshold_map: dict[float, float]
    average_map: float
    boundary_mae_sec: float | None = None
    fp_profile: dict | None = None


def tiou(a: Interval, b: Interval) -> float:
    """Temporal intersection-over-union of two (start, end) intervals."""
    if a[0] >= a[1] or b[0] >= b[1]:
        raise ValueError(f"intervals must satisfy start < end, got {a} and {b}")
    inter = min(a[1], b[1]) - max(a[0], b[0])
    if inter <= 0:
        return 0.0
    union = (a[1] - a[0]) + (b[1] - b[0]) - inter
    return inter / union


def mean_ap(
    predictions: Mapping[str, Sequence[PredRow]],
    ground_truth: Mapping[str, Sequence[GroundTruthInstance]],
    thresholds: Sequence[float],
) -> EvalReport:
    """mAP at each threshold and their mean.

    Classes absent from the ground truth are excluded from the class mean;
    an entirely empty ground truth yields mAP 0 with a warning.
    """
    classes = sorted({g.label for rows in ground_truth.values() for g in rows}, key=str)
    if not classes:
        logger.warning("ground truth contains no instances; mAP is defined as 0")
        per = {float(t): 0.0 for t in thresholds}
        return EvalReport(per_threshold_map=per, average_map=0.0)

    per_threshold: dict[float, list[float]] = {float(t): [] for t in thresholds}
    for cls in classes:
        preds = [
            (vid, s, e, score)
            for vid, rows in predictions.items()
            for (s, e, score, label) in rows
            if label == cls
        ]
        preds.sort(key=lambda r: (-r[3], r[0], r[1], r[2]))
        gts = {
            vid: [(g.start_sec, g.end_sec) for g in rows if g.label == cls]
            for vid, rows in ground_truth.items()
        }
        npos = sum(len(v) for v in gts.values())
        for t in per_threshold:
            per_threshold[t].append(_average_precision(preds, gts, npos, t))

    per = {t: float(np.mean(aps)) for t, aps in per_threshold.items()}
    return EvalReport(per_threshold_map=per, average_map=float(np.mean(list(per.values()))))


def match_pairs(
    predictions: Mapping[str, Sequence[PredRow]],
    ground_truth: Mapping[str, Sequence[GroundTruthInstance]],
    tiou_threshold: float = 0.5,
) -> list[tuple[Interval, Interval]]:
    """Greedy one-to-one matches at the threshold, as (pred, gt) interval pairs."""
    classes = sorted({g.label for rows in ground_truth.values() for g in rows}, key=str)
    pairs: list[tuple[Interval, Interval]] = []
    for cls in classes:
        preds = [
            (vid, s, e, score)
            for vid, rows in predictions.items()
            for (s, e, score, label) in rows
            if label == cls
        ]
        preds.sort(key=lambda r: (-r[3], r[0], r[1], r[2]))
        gts = {
            vid: [(g.start_sec, g.end_sec) for g in rows if g.label == cls]
            for vid, rows in ground_truth.items()
        }
        taken = {vid: [False] * len(rows) for vid, rows in gts.items()}
        for vid, s, e, _ in preds:
            j = _best_match((s, e), gts.get(vid, []), taken.get(vid, []), tiou_threshold)
            if j >= 0:
                taken[vid][j] = True
                pairs.append(((s, e), gts[vid][j]))
    return pairs


def boundary_mae(pairs: Iterable[tuple[Interval, Interval]]) -> float:
    """Mean of (|start delta| + |end delta|) / 2 over matched pairs, in seconds."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no matched pairs: boundary MAE is undefined")
    errs = [0.5 * (abs(p[0] - g[0]) + abs(p[1] - g[1])) for p, g in pairs]
    return float(np.mean(errs))


def fp_profile(
    predictions: Mapping[str, Sequence[PredRow]],
    ground_truth: Mapping[str, Sequence[GroundTruthInstance]],
    budget_multiples: Sequence[int],
    tiou_threshold: float = 0.5,
    video_durations: Mapping[str, float] | None = None,
    length_cut_points: tuple[float, float] = (30.0, 180.0),
) -> dict:
    """Classify top-scoring predictions per video into TP / localization / background.

    For each budget ``k`` the top ``k * G`` predictions per video are kept
    (G = that video's ground-truth count). A prediction matched one-to-one at
    the evaluation threshold is a true positive; otherwise its best overlap
    with any instance of the video decides: above ``BACKGROUND_TIOU`` it is a
    localization error, below it a background error. When video durations are
    supplied, the largest budget is additionally broken down into short /
    medium / long videos at the given cut points (seconds).
    """
    budgets = [int(k) for k in budget_multiples]
    if not budgets or any(k <= 0 for k in budgets):
        raise ValueError(f"budget multiples must be positive integers, got {budget_multiples}")

    per_budget = []
    per_video_classified: dict[str, list[str]] = {}
    max_budget = max(budgets)
    for k in sorted(budgets):
        counts = {"true_positive": 0, "localization_error": 0, "background_error": 0, "total": 0}
        for vid, gts in ground_truth.items():
            if not gts:
                continue
            kinds = _classify_video(predictions.get(vid, []), gts, k, tiou_threshold)
            for kind in kinds:
                counts[kind] += 1
            counts["total"] += len(kinds)
            if k == max_budget:
                per_video_classified[vid] = kinds
        per_budget.append({"multiple": k, **counts})

    profile = {
        "tiou_threshold": float(tiou_threshold),
        "background_tiou": BACKGROUND_TIOU,
        "budgets": per_budget,
    }
    if video_durations is not None:
        profile["length_cut_points_sec"] = list(length_cut_points)
        profile["length_buckets"] = _length_breakdown(
            per_video_classified, video_durations, length_cut_points
        )
    return profile


def _classify_video(
    rows: Sequence[PredRow],
    gts: Sequence[GroundTruthInstance],
    budget_multiple: int,
    threshold: float,
) -> list[str]:
    ordered = sorted(rows, key=lambda r: (-r[2], r[0], r[1]))
    top = ordered[: budget_multiple * len(gts)]
    by_class: dict[object, list[Interval]] = {}
    for g in gts:
        by_class.setdefault(g.label, []).append((g.start_sec, g.end_sec))
    taken = {label: [False] * len(v) for label, v in by_class.items()}
    all_intervals = [(g.start_sec, g.end_sec) for g in gts]

    kinds = []
    for s, e, _, label in top:
        cands = by_class.get(label, [])
        j = _best_match((s, e), cands, taken.get(label, []), threshold)
        if j >= 0:
            taken[label][j] = True
            kinds.append("true_positive")
            continue
        best = max((tiou((s, e), g) for g in all_intervals), default=0.0)
        kinds.append("localization_error" if best >= BACKGROUND_TIOU else "background_error")
    return kinds


def _length_breakdown(
    classified: Mapping[str, list[str]],
    durations: Mapping[str, float],
    cuts: tuple[float, float],
) -> dict:
    lo, hi = cuts
    buckets = {
        name: {"true_positive": 0, "localization_error": 0, "background_error": 0, "total": 0}
        for name in ("short", "medium", "long")
    }
    for vid, kinds in classified.items():
        d = durations.get(vid)
        if d is None:
            continue
        name = "short" if d < lo else ("medium" if d < hi else "long")
        for kind in kinds:
            buckets[name][kind] += 1
        buckets[name]["total"] += len(kinds)
    return buckets


def _best_match(
    pred: Interval,
    gts: Sequence[Interval],
    taken: Sequence[bool],
    threshold: float,
) -> int:
    best_j = -1
    best_v = 0.0
    for j, g in enumerate(gts):
        if taken[j]:
            continue
        v = tiou(pred, g)
        if v >= threshold and v > best_v:
            best_v = v
            best_j = j
    return best_j


def _average_precision(
    preds_sorted: Sequence[tuple[str, float, float, float]],
    gts_by_vid: Mapping[str, list[Interval]],
    npos: int,
    threshold: float,
) -> float:
    if npos == 0 or not preds_sorted:
        return 0.0
    taken = {vid: [False] * len(rows) for vid, rows in gts_by_vid.items()}
    tp = np.zeros(len(preds_sorted))
    for i, (vid, s, e, _) in enumerate(preds_sorted):
        j = _best_match((s, e), gts_by_vid.get(vid, []), taken.get(vid, []), threshold)
        if j >= 0:
            taken[vid][j] = True
            tp[i] = 1.0
    ctp = np.cumsum(tp)
    recall = ctp / npos
    precision = ctp / np.arange(1, len(preds_sorted) + 1)
    return _interpolated_ap(precision, recall)


def _interpolated_ap(precision: np.ndarray, recall: np.ndarray) -> float:
    # area under the right-to-left precision envelope, evaluated at every
    # recall change point (all-point interpolation)
    mprec = np.hstack(([0.0], precision, [0.0]))
    mrec = np.hstack(([0.0], recall, [1.0]))
    for i in range(len(mprec) - 2, -1, -1):
        mprec[i] = max(mprec[i], mprec[i + 1])
    idx = np.where(mrec[1:] != mrec[:-1])[0] + 1
    return float(np.sum((mrec[idx] - mrec[idx - 1]) * mprec[idx]))
