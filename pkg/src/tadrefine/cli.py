"""Command line: refine | gt-calibrate | simulate | eval | profile.

Every command validates its inputs completely before writing anything, so a
failing run never leaves partial output behind.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .formats import (
    DumpDocument,
    DumpValidationError,
    UnitMismatchError,
    VideoAnnotations,
    load_annotations,
    load_dump,
    write_annotations,
    write_dump,
)
from .grid import TemporalGrid
from .metrics import (
    ANET_THRESHOLDS,
    THUMOS_THRESHOLDS,
    boundary_mae,
    fp_profile,
    match_pairs,
    mean_ap,
)
from .pipeline import VideoPredictions, recover_resolution, refine_proposals, soft_nms
from .refine import RefinementConfig
from .synth import SynthScenario, generate
from .targets import make_training_targets

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_VALIDATION = 4
EXIT_UNITS = 5

CONFIG_ENV_VAR = "TADREFINE_CONFIG"

_NMS_DEFAULTS = {"soft_nms_sigma": 0.5, "score_floor": 1e-4, "top_k": 100}

_EPILOG = f"""exit codes:
  {EXIT_OK}  success
  {EXIT_USAGE}  unknown flags or bad usage
  {EXIT_MISSING_FILE}  missing input file
  {EXIT_VALIDATION}  schema or invariant violation in an input file
  {EXIT_UNITS}  coordinates inconsistent with the file's declared units

${CONFIG_ENV_VAR} may point to a JSON file with default settings
(keys: sigma, log_floor, max_offset, snap_window, smoothing_enabled,
quantize_mode, soft_nms_sigma, score_floor, top_k); command-line flags
override it.
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tadrefine",
        description="Post-process temporal action detections to sub-snippet resolution.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refine", help="refine a prediction dump and write it back in seconds")
    p.add_argument("--dump", required=True, help="input prediction dump (JSON)")
    p.add_argument("--out", required=True, help="output path for the refined dump")
    p.add_argument("--sigma", type=float, default=None, help="smoothing kernel width in snippets")
    p.add_argument("--no-smoothing", action="store_true", help="skip curve smoothing")
    p.add_argument("--snap-window", type=int, default=None, help="peak search half-width in snippets")
    p.add_argument("--max-offset", type=float, default=None, help="sub-snippet correction cap")
    p.add_argument("--soft-nms-sigma", type=float, default=None, help="Gaussian Soft-NMS decay width")
    p.add_argument("--jobs", type=int, default=1, help="videos processed in parallel")
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("gt-calibrate", help="synthesize per-video boundary training targets")
    p.add_argument("--annotations", required=True, help="annotation file (JSON)")
    p.add_argument("--num-snippets", type=int, required=True, help="snippet grid size T")
    p.add_argument("--sigma", type=float, required=True, help="target bump width in snippets")
    p.add_argument("--mode", choices=["floor", "ceil", "round"], default="floor")
    p.add_argument("--calibrated", choices=["on", "off"], default="on",
                   help="'on' keeps continuous centers, 'off' quantizes them")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gt_calibrate)

    p = sub.add_parser("simulate", help="generate a synthetic dump + annotations")
    p.add_argument("--scenario", required=True, help="scenario description (JSON)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("eval", help="score a dump against annotations")
    p.add_argument("--dump", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--benchmark", choices=["anet", "thumos"], default="anet",
                   help="threshold set: 0.5:0.05:0.95 (anet) or 0.3:0.1:0.7 (thumos)")
    p.add_argument("--out", required=True, help="report path (JSON)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("profile", help="false-positive profile at prediction budgets")
    p.add_argument("--dump", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--budgets", default="1,2,3,4,5,6,7,8,9,10",
                   help="comma-separated multiples of each video's GT count")
    p.add_argument("--tiou", type=float, default=0.5, help="true-positive tIoU threshold")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_profile)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except UnitMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNITS
    except (DumpValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def run() -> None:
    """Console-script entry point."""
    raise SystemExit(main())


def _env_defaults() -> dict:
    path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise DumpValidationError(f"{path}: config must be a JSON object")
    allowed = set(RefinementConfig.__dataclass_fields__) | set(_NMS_DEFAULTS)
    unknown = set(data) - allowed
    if unknown:
        raise DumpValidationError(f"{path}: unknown config keys: {sorted(unknown)}")
    return data


def _refinement_config(args: argparse.Namespace, env: dict) -> RefinementConfig:
    cfg = RefinementConfig(**{k: v for k, v in env.items() if k in RefinementConfig.__dataclass_fields__})
    if args.sigma is not None:
        cfg = replace(cfg, sigma=args.sigma)
    if args.snap_window is not None:
        cfg = replace(cfg, snap_window=args.snap_window)
    if args.max_offset is not None:
        cfg = replace(cfg, max_offset=args.max_offset)
    if args.no_smoothing:
        cfg = replace(cfg, smoothing_enabled=False)
    return cfg


def _refine_video(video: VideoPredictions, cfg: RefinementConfig, nms: dict) -> VideoPredictions:
    refined = refine_proposals(video, cfg)
    survivors = soft_nms(
        refined.proposals,
        sigma_nms=nms["soft_nms_sigma"],
        score_floor=nms["score_floor"],
        top_k=nms["top_k"],
    )
    return replace(refined, proposals=survivors)


def _refine_job(payload: tuple[VideoPredictions, RefinementConfig, dict]) -> VideoPredictions:
    return _refine_video(*payload)


def _cmd_refine(args: argparse.Namespace) -> int:
    env = _env_defaults()
    cfg = _refinement_config(args, env)
    nms = dict(_NMS_DEFAULTS)
    nms.update({k: v for k, v in env.items() if k in _NMS_DEFAULTS})
    if args.soft_nms_sigma is not None:
        nms["soft_nms_sigma"] = args.soft_nms_sigma
    if args.jobs < 1:
        raise ValueError(f"--jobs must be at least 1, got {args.jobs}")

    doc = load_dump(args.dump)
    items = list(doc.videos.items())
    if args.jobs == 1 or len(items) < 2:
        processed = [_refine_video(v, cfg, nms) for _, v in items]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            processed = list(pool.map(_refine_job, [(v, cfg, nms) for _, v in items], chunksize=16))
    videos = {vid: video for (vid, _), video in zip(items, processed)}
    write_dump(replace(doc, videos=videos), args.out, units="second")
    return EXIT_OK


def _cmd_gt_calibrate(args: argparse.Namespace) -> int:
    annotations = load_annotations(args.annotations)
    calibrated = args.calibrated == "on"
    payload = {}
    for vid, anno in sorted(annotations.items()):
        grid = TemporalGrid(duration_sec=anno.duration_sec, num_snippets=args.num_snippets)
        instances = []
        for gt in anno.instances:
            start_hm, end_hm = make_training_targets(
                gt, grid, sigma=args.sigma, calibrated=calibrated, mode=args.mode
            )
            instances.append(
                {
                    "label": gt.label,
                    "start_center": round(start_hm.center, 6),
                    "end_center": round(end_hm.center, 6),
                    "start_values": np.round(start_hm.values, 6).tolist(),
                    "end_values": np.round(end_hm.values, 6).tolist(),
                }
            )
        payload[vid] = {
            "duration_sec": round(anno.duration_sec, 6),
            "num_snippets": args.num_snippets,
            "sigma": args.sigma,
            "quantize_mode": args.mode,
            "calibrated": calibrated,
            "instances": instances,
        }
    _write_json(payload, args.out)
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario = SynthScenario.from_dict(json.loads(Path(args.scenario).read_text()))
    out_dir = Path(args.out_dir)

    datasets = {T: generate(scenario, T) for T in scenario.snippet_counts}
    out_dir.mkdir(parents=True, exist_ok=True)
    first = next(iter(datasets.values()))
    annotations = {
        video.video_id: VideoAnnotations(duration_sec=video.grid.duration_sec, instances=gts)
        for video, gts in first
    }
    write_annotations(annotations, out_dir / "annotations.json")
    for T, data in datasets.items():
        doc = DumpDocument(videos={video.video_id: video for video, _ in data})
        write_dump(doc, out_dir / f"dump_T{T}.json", units="snippet")
    return EXIT_OK


def _load_eval_inputs(dump_path: str, annotations_path: str):
    doc = load_dump(dump_path)
    annotations = load_annotations(annotations_path)
    predictions = {vid: recover_resolution(video) for vid, video in doc.videos.items()}
    ground_truth = {vid: anno.instances for vid, anno in annotations.items()}
    durations = {vid: anno.duration_sec for vid, anno in annotations.items()}
    return predictions, ground_truth, durations


def _cmd_eval(args: argparse.Namespace) -> int:
    thresholds = ANET_THRESHOLDS if args.benchmark == "anet" else THUMOS_THRESHOLDS
    predictions, ground_truth, _ = _load_eval_inputs(args.dump, args.annotations)
    report = mean_ap(predictions, ground_truth, thresholds)
    pairs = match_pairs(predictions, ground_truth, tiou_threshold=0.5)
    mae = boundary_mae(pairs) if pairs else None

    payload = {
        "benchmark": args.benchmark,
        "thresholds": [float(t) for t in thresholds],
        "per_threshold_map": {f"{t:g}": round(v, 6) for t, v in report.per_threshold_map.items()},
        "average_map": round(report.average_map, 6),
        "boundary_mae_sec": round(mae, 6) if mae is not None else None,
        "matched_pairs": len(pairs),
    }
    _write_json(payload, args.out)

    print("tIoU " + "  ".join(f"{t:>6.2f}" for t in thresholds) + "     Avg")
    print(
        "mAP  "
        + "  ".join(f"{report.per_threshold_map[float(t)]:>6.4f}" for t in thresholds)
        + f"  {report.average_map:>6.4f}"
    )
    return EXIT_OK


def _cmd_profile(args: argparse.Namespace) -> int:
    try:
        budgets = [int(b) for b in args.budgets.split(",") if b.strip()]
    except ValueError as exc:
        raise ValueError(f"--budgets must be comma-separated integers, got {args.budgets!r}") from exc
    predictions, ground_truth, durations = _load_eval_inputs(args.dump, args.annotations)
    profile = fp_profile(
        predictions,
        ground_truth,
        budgets,
        tiou_threshold=args.tiou,
        video_durations=durations,
    )
    _write_json(profile, args.out)
    for row in profile["budgets"]:
        print(
            f"budget {row['multiple']:>3}G: TP {row['true_positive']:>6}  "
            f"loc {row['localization_error']:>6}  bg {row['background_error']:>6}  "
            f"of {row['total']}"
        )
    return EXIT_OK


def _write_json(payload, path: str | Path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


if __name__ == "__main__":
    sys.exit(main())
