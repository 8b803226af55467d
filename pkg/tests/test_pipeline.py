import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tadrefine.grid import TemporalGrid
from tadrefine.pipeline import (
    Proposal,
    VideoPredictions,
    recover_resolution,
    refine_proposals,
    soft_nms,
)
from tadrefine.refine import RefinementConfig, ScoreCurve


def gaussian_curve(n, center, sigma=2.0):
    return np.exp(-((np.arange(n) - center) ** 2) / (2.0 * sigma * sigma))


def make_video(n=64, duration=128.0, start_center=14.0, end_center=53.0, proposals=None):
    return VideoPredictions(
        video_id="v0",
        grid=TemporalGrid(duration_sec=duration, num_snippets=n),
        start_curve=ScoreCurve(gaussian_curve(n, start_center), "start"),
        end_curve=ScoreCurve(gaussian_curve(n, end_center), "end"),
        proposals=proposals or [],
    )


class TestRefineProposals:
    def test_proposal_at_integer_peaks_is_unchanged(self):
        video = make_video(proposals=[Proposal(14.0, 53.0, 0.9, "a")])
        out = refine_proposals(video, RefinementConfig())
        p = out.proposals[0]
        assert p.start == pytest.approx(14.0, abs=1e-9)
        assert p.end == pytest.approx(53.0, abs=1e-9)
        assert p.start_refined and p.end_refined
        assert p.score == 0.9 and p.label == "a"

    def test_recovers_continuous_boundaries(self):
        video = make_video(start_center=14.37, end_center=52.81,
                           proposals=[Proposal(14.0, 53.0, 0.8, "a")])
        out = refine_proposals(video, RefinementConfig(smoothing_enabled=False))
        p = out.proposals[0]
        assert p.start == pytest.approx(14.37, abs=1e-4)
        assert p.end == pytest.approx(52.81, abs=1e-4)

    def test_crossing_refinement_reverts_and_flags(self):
        # start curve peaks right of the end curve peak, so refinement crosses
        video = make_video(start_center=10.45, end_center=10.05,
                           proposals=[Proposal(10.0, 11.0, 0.7, "a")])
        out = refine_proposals(video, RefinementConfig(smoothing_enabled=False))
        p = out.proposals[0]
        assert p.reverted
        assert (p.start, p.end) == (10.0, 11.0)
        assert not (p.start_refined or p.end_refined)

    def test_missing_curves_pass_through_with_warning(self, caplog):
        video = VideoPredictions(
            video_id="bare",
            grid=TemporalGrid(duration_sec=10.0, num_snippets=10),
            proposals=[Proposal(2.0, 7.0, 0.5, "a")],
        )
        with caplog.at_level("WARNING"):
            out = refine_proposals(video, RefinementConfig())
        assert out.proposals[0].start == 2.0
        assert not out.proposals[0].start_refined
        assert any("bare" in r.message for r in caplog.records)

    def test_order_scores_labels_preserved(self):
        proposals = [Proposal(10.0, 20.0, 0.3, "b"), Proposal(14.0, 53.0, 0.9, "a")]
        out = refine_proposals(make_video(proposals=proposals), RefinementConfig())
        assert [p.label for p in out.proposals] == ["b", "a"]
        assert [p.score for p in out.proposals] == [0.3, 0.9]

    def test_movement_bounded_by_snap_window_plus_offset(self):
        rng = np.random.default_rng(5)
        cfg = RefinementConfig()
        bound = cfg.snap_window + cfg.max_offset + 1e-12
        for _ in range(100):
            n = 48
            values = rng.uniform(0.0, 1.0, n)
            video = VideoPredictions(
                video_id="v",
                grid=TemporalGrid(duration_sec=96.0, num_snippets=n),
                start_curve=ScoreCurve(values, "start"),
                end_curve=ScoreCurve(rng.uniform(0.0, 1.0, n), "end"),
                proposals=[Proposal(float(rng.integers(1, n // 2)), float(rng.integers(n // 2 + 1, n)), 0.5, "a")],
            )
            out = refine_proposals(video, cfg)
            p_in, p_out = video.proposals[0], out.proposals[0]
            assert abs(p_out.start - p_in.start) <= bound
            assert abs(p_out.end - p_in.end) <= bound

    def test_idempotent_once_converged_without_smoothing(self):
        cfg = RefinementConfig(smoothing_enabled=False)
        video = make_video(start_center=14.37, end_center=52.81,
                           proposals=[Proposal(14.0, 53.0, 0.8, "a")])
        once = refine_proposals(video, cfg)
        twice = refine_proposals(once, cfg)
        for p1, p2 in zip(once.proposals, twice.proposals):
            assert abs(p1.start - p2.start) <= 1e-6
            assert abs(p1.end - p2.end) <= 1e-6


class TestRecoverResolution:
    def test_linear_map(self):
        video = VideoPredictions(
            video_id="v",
            grid=TemporalGrid(duration_sec=200.0, num_snippets=100),
            proposals=[Proposal(25.0, 75.0, 0.9, "a")],
        )
        rows = recover_resolution(video)
        assert rows == [(50.0, 150.0, 0.9, "a")]

    def test_matches_grid_example(self):
        video = VideoPredictions(
            video_id="v",
            grid=TemporalGrid(duration_sec=100.0, num_snippets=25),
            proposals=[Proposal(9.3, 20.0, 0.9, "a")],
        )
        assert recover_resolution(video)[0][0] == pytest.approx(37.2, abs=1e-9)

    def test_empty_list(self):
        video = VideoPredictions(
            video_id="v", grid=TemporalGrid(duration_sec=10.0, num_snippets=5)
        )
        assert recover_resolution(video) == []

    def test_sorted_by_descending_score_and_containment(self):
        video = VideoPredictions(
            video_id="v",
            grid=TemporalGrid(duration_sec=100.0, num_snippets=50),
            proposals=[
                Proposal(5.0, 10.0, 0.2, "a"),
                Proposal(1.0, 4.0, 0.8, "a"),
                Proposal(20.0, 30.0, 0.5, "b"),
            ],
        )
        rows = recover_resolution(video)
        assert [r[2] for r in rows] == [0.8, 0.5, 0.2]
        assert all(r[0] < r[1] for r in rows)


class TestSoftNms:
    def test_single_proposal_unchanged(self):
        p = Proposal(2.0, 8.0, 0.7, "a")
        out = soft_nms([p])
        assert out == [p]

    def test_identical_intervals_decay_by_closed_form(self):
        sigma = 0.5
        props = [Proposal(2.0, 8.0, 0.9, "a"), Proposal(2.0, 8.0, 0.8, "a")]
        out = soft_nms(props, sigma_nms=sigma)
        assert out[0].score == 0.9
        assert out[1].score == pytest.approx(0.8 * math.exp(-1.0 / sigma), rel=1e-12)

    def test_disjoint_intervals_are_untouched(self):
        props = [Proposal(0.0, 5.0, 0.9, "a"), Proposal(10.0, 15.0, 0.8, "a")]
        out = soft_nms(props)
        assert [p.score for p in out] == [0.9, 0.8]

    def test_only_same_label_is_suppressed(self):
        props = [Proposal(2.0, 8.0, 0.9, "a"), Proposal(2.0, 8.0, 0.8, "b")]
        out = soft_nms(props)
        assert [p.score for p in out] == [0.9, 0.8]

    def test_score_floor_drops_and_top_k_caps(self):
        props = [Proposal(2.0, 8.0, 0.9, "a"), Proposal(2.0, 8.0, 0.8, "a")]
        out = soft_nms(props, sigma_nms=0.05, score_floor=0.5)
        assert len(out) == 1  # second decays to ~1.6e-9 and is dropped
        props = [Proposal(float(i), float(i) + 0.5, 0.5, "a") for i in range(10)]
        assert len(soft_nms(props, top_k=3)) == 3

    def test_tie_breaks_on_start_time(self):
        props = [Proposal(5.0, 9.0, 0.7, "a"), Proposal(1.0, 4.0, 0.7, "a")]
        out = soft_nms(props)
        assert out[0].start == 1.0

    def test_rejects_non_positive_sigma(self):
        with pytest.raises(ValueError):
            soft_nms([Proposal(0.0, 1.0, 0.5, "a")], sigma_nms=0.0)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_scores_never_increase_and_output_sorted(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 20))
        props = []
        for _ in range(n):
            start = rng.uniform(0, 50)
            props.append(
                Proposal(start, start + rng.uniform(0.5, 20), float(rng.uniform(0.01, 1.0)),
                         str(rng.integers(0, 3)))
            )
        before = {id(p): p.score for p in props}
        out = soft_nms(props, score_floor=0.0)
        assert len(out) == len(props)  # floor 0 keeps everyone
        scores = [p.score for p in out]
        assert scores == sorted(scores, reverse=True)
        originals = {(p.start, p.end, p.label): p.score for p in props}
        for p in out:
            assert p.score <= originals[(p.start, p.end, p.label)] + 1e-15

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        props = [
            Proposal(float(s), float(s) + 3.0, float(round(rng.uniform(0.1, 1.0), 3)), "a")
            for s in rng.uniform(0, 30, 15)
        ]
        first = soft_nms(props)
        second = soft_nms(props)
        assert first == second


class TestTypes:
    def test_proposal_validation(self):
        with pytest.raises(ValueError):
            Proposal(5.0, 5.0, 0.5, "a")
        with pytest.raises(ValueError):
            Proposal(1.0, 5.0, 1.5, "a")
        with pytest.raises(ValueError):
            Proposal(1.0, float("inf"), 0.5, "a")

    def test_video_curve_length_checked(self):
        with pytest.raises(ValueError, match="length"):
            VideoPredictions(
                video_id="v",
                grid=TemporalGrid(duration_sec=10.0, num_snippets=10),
                start_curve=ScoreCurve(np.ones(8), "start"),
            )
