"""Seeded synthetic benchmark reproducing the snippet-quantization error end to end.

Videos get continuous ground-truth instances; boundary curves are Gaussian
bumps placed at the exact (continuous) boundary snippet coordinates, optionally
corrupted with clamped Gaussian noise; baseline proposals snap those boundaries
to integer snippets. Everything is a pure function of the scenario seed, with
one RNG stream per video so parallel order can never change the data.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

from .grid import TemporalGrid, to_snippet
from .metrics import ANET_THRESHOLDS, mean_ap
from .pipeline import Proposal, VideoPredictions, recover_resolution, refine_proposals
from .refine import QUANTIZE_MODES, RefinementConfig, ScoreCurve
from .targets import GroundTruthInstance, quantize_point, synthesize_heatmap

# placement thresholds, expressed in snippets of the coarsest grid; the edge
# margin keeps bumps out of reach of the smoothing kernel's replicated padding
_EDGE_MARGIN_SNIPPETS = 5.0
_MIN_GAP_SNIPPETS = 1.0


@dataclass
class SynthScenario:
    """Knobs of one synthetic benchmark run."""

    num_videos: int = 100
    duration_range_sec: tuple[float, float] = (60.0, 180.0)
    instances_per_video: tuple[int, int] = (1, 2)
    snippet_counts: tuple[int, ...] = (25, 100, 400)
    curve_sigma: float = 2.0
    noise_std: float = 0.0
    seed: int = 0
    num_classes: int = 3

    def __post_init__(self) -> None:
        self.duration_range_sec = tuple(float(x) for x in self.duration_range_sec)
        self.instances_per_video = tuple(int(x) for x in self.instances_per_video)
        self.snippet_counts = tuple(int(t) for t in self.snippet_counts)
        if self.num_videos < 1:
            raise ValueError(f"num_videos must be at least 1, got {self.num_videos}")
        lo, hi = self.duration_range_sec
        if not 0 < lo <= hi:
            raise ValueError(f"duration range must satisfy 0 < lo <= hi, got {self.duration_range_sec}")
        ilo, ihi = self.instances_per_video
        if not 1 <= ilo <= ihi:
            raise ValueError(f"instances_per_video must satisfy 1 <= lo <= hi, got {self.instances_per_video}")
        if not self.snippet_counts or any(t < 8 for t in self.snippet_counts):
            raise ValueError(f"snippet_counts must all be at least 8, got {self.snippet_counts}")
        if self.curve_sigma <= 0:
            raise ValueError(f"curve_sigma must be positive, got {self.curve_sigma}")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be non-negative, got {self.noise_std}")
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be at least 1, got {self.num_classes}")
        margin, min_len, _, min_gap = _placement_params(self)
        cell = 1.0 / min(self.snippet_counts)
        needed = 2 * margin + cell + ihi * min_len + (ihi - 1) * min_gap
        if needed > 0.98:
            raise ValueError(
                f"infeasible scenario: {ihi} instances need {needed:.2f} of the video "
                f"at the coarsest grid (T={min(self.snippet_counts)})"
            )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthScenario":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        return cls(**data)


def generate(
    scenario: SynthScenario,
    num_snippets: int | None = None,
    proposal_snap: str = "round",
) -> list[tuple[VideoPredictions, list[GroundTruthInstance]]]:
    """Build the benchmark at one snippet resolution.

    Ground truth depends only on ``(seed, video index)``, so every resolution
    sees the same videos. ``proposals[i]`` corresponds to ``instances[i]``.
    ``proposal_snap`` selects how baseline proposals quantize the true
    boundaries (round is the most favorable baseline).
    """
    if num_snippets is None:
        if len(scenario.snippet_counts) != 1:
            raise ValueError("num_snippets is required when the scenario lists several resolutions")
        num_snippets = scenario.snippet_counts[0]
    if num_snippets not in scenario.snippet_counts:
        raise ValueError(f"num_snippets {num_snippets} not among scenario resolutions {scenario.snippet_counts}")
    if proposal_snap not in QUANTIZE_MODES:
        raise ValueError(f"proposal_snap must be one of {QUANTIZE_MODES}, got {proposal_snap!r}")

    T = int(num_snippets)
    margin, min_len, max_len, min_gap = _placement_params(scenario)
    cell = 1.0 / min(scenario.snippet_counts)
    out = []
    for i in range(scenario.num_videos):
        rng = np.random.default_rng((scenario.seed, i))
        duration = float(rng.uniform(*scenario.duration_range_sec))
        count = int(rng.integers(scenario.instances_per_video[0], scenario.instances_per_video[1] + 1))
        spans = _place_instances(rng, count, margin, min_len, max_len, min_gap, cell)
        labels = [f"class_{int(c):02d}" for c in rng.integers(0, scenario.num_classes, count)]
        scores = rng.uniform(0.5, 1.0, count)

        grid = TemporalGrid(duration_sec=duration, num_snippets=T)
        instances = [
            GroundTruthInstance(start_sec=f0 * duration, end_sec=f1 * duration, label=lab)
            for (f0, f1), lab in zip(spans, labels)
        ]

        start_vals = np.zeros(T)
        end_vals = np.zeros(T)
        proposals = []
        for (f0, f1), label, score in zip(spans, labels, scores):
            center_s, center_e = f0 * T, f1 * T
            np.maximum(start_vals, synthesize_heatmap(center_s, T, scenario.curve_sigma).values, out=start_vals)
            np.maximum(end_vals, synthesize_heatmap(center_e, T, scenario.curve_sigma).values, out=end_vals)
            proposals.append(
                Proposal(
                    start=float(min(quantize_point(center_s, proposal_snap), T - 1)),
                    end=float(min(quantize_point(center_e, proposal_snap), T - 1)),
                    score=float(score),
                    label=label,
                )
            )

        if scenario.noise_std > 0:
            noise_rng = np.random.default_rng((scenario.seed, i, T))
            start_vals = np.maximum(start_vals + noise_rng.normal(0.0, scenario.noise_std, T), 0.0)
            end_vals = np.maximum(end_vals + noise_rng.normal(0.0, scenario.noise_std, T), 0.0)

        video = VideoPredictions(
            video_id=f"synthetic_{i:05d}",
            grid=grid,
            start_curve=ScoreCurve(start_vals, "start"),
            end_curve=ScoreCurve(end_vals, "end"),
            proposals=proposals,
        )
        out.append((video, instances))
    return out


def boundary_errors_snippets(
    data: Sequence[tuple[VideoPredictions, list[GroundTruthInstance]]],
) -> tuple[np.ndarray, np.ndarray]:
    """Per-boundary |proposal - true| errors, using the generator's pairing.

    Returns ``(errors_snippets, errors_seconds)`` flattened over all
    boundaries of all videos.
    """
    snip, sec = [], []
    for video, instances in data:
        lam = video.grid.lambda_sec
        for p, g in zip(video.proposals, instances):
            es = abs(p.start - to_snippet(g.start_sec, video.grid))
            ee = abs(p.end - to_snippet(g.end_sec, video.grid))
            snip.extend((es, ee))
            sec.extend((es * lam, ee * lam))
    return np.asarray(snip), np.asarray(sec)


def run_sweep(
    scenario: SynthScenario,
    cfg: RefinementConfig,
    quantize_modes: Sequence[str] = QUANTIZE_MODES,
    thresholds: Sequence[float] = ANET_THRESHOLDS,
) -> list[dict]:
    """Metric table over every (resolution, snap mode, refinement, smoothing) cell.

    Baseline cells (refinement off) carry ``smoothing: None``. Rows are plain
    dicts, ready for JSON serialization.
    """
    rows = []
    for T in scenario.snippet_counts:
        for mode in quantize_modes:
            data = generate(scenario, T, proposal_snap=mode)
            rows.append(_cell_row(data, T, mode, refine=False, smoothing=None, thresholds=thresholds))
            for smoothing in (False, True):
                cell_cfg = replace(cfg, smoothing_enabled=smoothing)
                refined = [(refine_proposals(v, cell_cfg), g) for v, g in data]
                rows.append(_cell_row(refined, T, mode, refine=True, smoothing=smoothing, thresholds=thresholds))
    return rows


def _cell_row(data, T, mode, refine, smoothing, thresholds) -> dict:
    errs_snip, errs_sec = boundary_errors_snippets(data)
    predictions = {v.video_id: recover_resolution(v) for v, _ in data}
    ground_truth = {v.video_id: gts for v, gts in data}
    report = mean_ap(predictions, ground_truth, thresholds)
    return {
        "num_snippets": int(T),
        "quantize_mode": mode,
        "refine": bool(refine),
        "smoothing": smoothing,
        "boundary_mae_snippets": float(errs_snip.mean()),
        "boundary_mae_sec": float(errs_sec.mean()),
        "average_map": report.average_map,
        "per_threshold_map": {f"{t:g}": v for t, v in report.per_threshold_map.items()},
    }


def _placement_params(scenario: SynthScenario) -> tuple[float, float, float, float]:
    coarsest = min(scenario.snippet_counts)
    margin = _EDGE_MARGIN_SNIPPETS / coarsest
    # same-type boundaries of neighboring instances must not spill into each
    # other's refinement stencils, so instance length doubles as separation
    min_len = max(3.0 * scenario.curve_sigma, 6.0) / coarsest
    max_len = min(2.5 * min_len, 0.9)
    min_gap = _MIN_GAP_SNIPPETS / coarsest
    return margin, min_len, max_len, min_gap


def _place_instances(
    rng: np.random.Generator,
    count: int,
    margin: float,
    min_len: float,
    max_len: float,
    min_gap: float,
    cell: float,
) -> list[tuple[float, float]]:
    """Non-overlapping (start, end) spans as fractions of the video duration."""
    # capping lengths by the per-instance share of the free space makes any
    # draw feasible, so placement never needs rejection sampling
    budget = 1.0 - 2 * margin - cell
    cap = (budget - (count - 1) * min_gap) / count
    max_len = min(max_len, cap)
    if max_len < min_len:
        raise ValueError("could not place instances; scenario ranges are too tight")
    lengths = rng.uniform(min_len, max_len, count)
    free = budget - lengths.sum() - (count - 1) * min_gap
    slack = free * rng.dirichlet(np.ones(count + 1))
    # a one-cell phase shift makes boundary fractional parts uniform on the
    # snippet grid, so snapped baselines hit the quarter-snippet expectation
    phase = rng.uniform(0.0, cell)
    spans = []
    cursor = margin + phase + slack[0]
    for j in range(count):
        spans.append((cursor, cursor + lengths[j]))
        cursor += lengths[j] + min_gap + slack[j + 1]
    return spans
