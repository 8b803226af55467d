"""Post-processing toolkit for temporal action detection.

Refines snippet-resolution boundary predictions to continuous (sub-snippet)
resolution via Gaussian modelling of the boundary score curve, and ships the
ground-truth calibration, evaluation, and simulation machinery needed to
quantify the temporal quantization error it removes.
"""

from .grid import SnippetCoord, TemporalGrid, to_seconds, to_snippet
from .metrics import (
    ANET_THRESHOLDS,
    THUMOS_THRESHOLDS,
    EvalReport,
    boundary_mae,
    fp_profile,
    match_pairs,
    mean_ap,
    tiou,
)
from .pipeline import (
    Proposal,
    VideoPredictions,
    recover_resolution,
    refine_proposals,
    soft_nms,
)
from .refine import (
    GaussianKernel,
    RefineResult,
    RefinementConfig,
    ScoreCurve,
    build_kernel,
    log_transform,
    refine_boundary,
    refine_many,
    smooth_and_rescale,
    taylor_refine,
)
from .synth import SynthScenario, boundary_errors_snippets, generate, run_sweep
from .targets import (
    BoundaryHeatmap,
    GroundTruthInstance,
    downsample_gt,
    make_training_targets,
    quantize_point,
    synthesize_heatmap,
)

__version__ = "0.1.0"

__all__ = [
    "ANET_THRESHOLDS",
    "BoundaryHeatmap",
    "EvalReport",
    "GaussianKernel",
    "GroundTruthInstance",
    "Proposal",
    "RefineResult",
    "RefinementConfig",
    "ScoreCurve",
    "SnippetCoord",
    "SynthScenario",
    "THUMOS_THRESHOLDS",
    "TemporalGrid",
    "VideoPredictions",
    "boundary_errors_snippets",
    "boundary_mae",
    "build_kernel",
    "downsample_gt",
    "fp_profile",
    "generate",
    "log_transform",
    "make_training_targets",
    "match_pairs",
    "mean_ap",
    "quantize_point",
    "recover_resolution",
    "refine_boundary",
    "refine_many",
    "refine_proposals",
    "run_sweep",
    "smooth_and_rescale",
    "soft_nms",
    "synthesize_heatmap",
    "taylor_refine",
    "tiou",
    "to_seconds",
    "to_snippet",
]
