"""Prediction-dump and annotation JSON formats: validation, units, round trips.

Both formats are schema-checked (see ``tadrefine/schemas/``) before any
cross-field invariants run, and loaders normalize proposal coordinates to
snippet units. Unknown fields survive a load/write round trip untouched.
Writers serialize numbers at 6 decimal places with canonically sorted keys, so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .grid import TemporalGrid
from .pipeline import Proposal, VideoPredictions
from .refine import ScoreCurve
from .targets import GroundTruthInstance

DUMP_VERSION = "1.0"

# slack for 6-decimal serialization round-off when checking range invariants
_RANGE_TOL = 1e-6

_VIDEO_KEYS = {"duration_sec", "num_snippets", "proposals", "start_curve", "end_curve"}
_TOP_KEYS = {"version", "units", "results"}


class DumpValidationError(ValueError):
    """Schema or invariant violation in an input file."""


class UnitMismatchError(DumpValidationError):
    """Coordinates inconsistent with the file's declared units."""


def _load_schema(name: str) -> jsonschema.Draft202012Validator:
    text = resources.files("tadrefine.schemas").joinpath(name).read_text()
    return jsonschema.Draft202012Validator(json.loads(text))


_DUMP_VALIDATOR = _load_schema("prediction_dump.schema.json")
_ANNOTATION_VALIDATOR = _load_schema("annotations.schema.json")


@dataclass
class DumpDocument:
    """A parsed prediction dump, normalized to snippet coordinates."""

    videos: dict[str, VideoPredictions]
    version: str = DUMP_VERSION
    extras: dict = field(default_factory=dict)
    video_extras: dict[str, dict] = field(default_factory=dict)


@dataclass
class VideoAnnotations:
    """Ground truth for one video."""

    duration_sec: float
    instances: list[GroundTruthInstance]


def load_dump(path: str | Path) -> DumpDocument:
    """Parse and fully validate a prediction dump before returning anything."""
    raw = _read_json(path)
    _check_schema(_DUMP_VALIDATOR, raw, path)
    units = raw["units"]

    videos: dict[str, VideoPredictions] = {}
    video_extras: dict[str, dict] = {}
    for vid, entry in raw["results"].items():
        grid = TemporalGrid(duration_sec=entry["duration_sec"], num_snippets=entry["num_snippets"])
        curves = {}
        for key, kind in (("start_curve", "start"), ("end_curve", "end")):
            if key in entry:
                if len(entry[key]) != grid.num_snippets:
                    raise DumpValidationError(
                        f"video {vid!r}: field {key!r} has length {len(entry[key])}, "
                        f"expected num_snippets={grid.num_snippets}"
                    )
                curves[kind] = ScoreCurve(np.asarray(entry[key], dtype=np.float64), kind)
        proposals = [
            _load_proposal(vid, i, p, grid, units) for i, p in enumerate(entry["proposals"])
        ]
        videos[vid] = VideoPredictions(
            video_id=vid,
            grid=grid,
            start_curve=curves.get("start"),
            end_curve=curves.get("end"),
            proposals=proposals,
        )
        extra = {k: v for k, v in entry.items() if k not in _VIDEO_KEYS}
        if extra:
            video_extras[vid] = extra

    extras = {k: v for k, v in raw.items() if k not in _TOP_KEYS}
    return DumpDocument(videos=videos, version=raw["version"], extras=extras, video_extras=video_extras)


def write_dump(doc: DumpDocument, path: str | Path, units: str = "second") -> None:
    """Serialize a dump in the requested units; nothing is written on failure."""
    if units not in ("snippet", "second"):
        raise ValueError(f"units must be 'snippet' or 'second', got {units!r}")
    results = {}
    for vid, video in doc.videos.items():
        factor = video.grid.lambda_sec if units == "second" else 1.0
        entry: dict = {
            "duration_sec": _round6(video.grid.duration_sec),
            "num_snippets": video.grid.num_snippets,
            "proposals": [
                {
                    "start": _round6(p.start * factor),
                    "end": _round6(p.end * factor),
                    "score": _round6(p.score),
                    "label": p.label,
                }
                for p in video.proposals
            ],
        }
        for key, curve in (("start_curve", video.start_curve), ("end_curve", video.end_curve)):
            if curve is not None:
                entry[key] = np.round(curve.values, 6).tolist()
        entry.update(doc.video_extras.get(vid, {}))
        results[vid] = entry

    payload = {"version": doc.version, "units": units, "results": results}
    payload.update(doc.extras)
    _write_json(payload, path)


def load_annotations(path: str | Path) -> dict[str, VideoAnnotations]:
    """Parse and fully validate an annotation file."""
    raw = _read_json(path)
    _check_schema(_ANNOTATION_VALIDATOR, raw, path)
    out: dict[str, VideoAnnotations] = {}
    for vid, entry in raw.items():
        duration = float(entry["duration_sec"])
        instances = []
        for i, ann in enumerate(entry["annotations"]):
            start, end = (float(x) for x in ann["segment"])
            end = _snap_into_range(end, duration, vid, f"annotations[{i}].segment")
            if not 0 <= start < end:
                raise DumpValidationError(
                    f"video {vid!r}: annotations[{i}].segment must satisfy 0 <= start < end, "
                    f"got [{start}, {end}]"
                )
            instances.append(GroundTruthInstance(start_sec=start, end_sec=end, label=ann["label"]))
        out[vid] = VideoAnnotations(duration_sec=duration, instances=instances)
    return out


def write_annotations(annotations: dict[str, VideoAnnotations], path: str | Path) -> None:
    payload = {
        vid: {
            "duration_sec": _round6(a.duration_sec),
            "annotations": [
                {"segment": [_round6(g.start_sec), _round6(g.end_sec)], "label": g.label}
                for g in a.instances
            ],
        }
        for vid, a in annotations.items()
    }
    _write_json(payload, path)


def _load_proposal(vid: str, index: int, p: dict, grid: TemporalGrid, units: str) -> Proposal:
    limit = grid.duration_sec if units == "second" else float(grid.num_snippets)
    where = f"proposals[{index}]"
    start = _snap_into_range(p["start"], limit, vid, f"{where}.start")
    end = _snap_into_range(p["end"], limit, vid, f"{where}.end")
    if start >= end:
        raise DumpValidationError(
            f"video {vid!r}: {where} must satisfy start < end, got ({p['start']}, {p['end']})"
        )
    if units == "second":
        start /= grid.lambda_sec
        end /= grid.lambda_sec
    return Proposal(start=start, end=end, score=p["score"], label=p["label"])


def _snap_into_range(value: float, limit: float, vid: str, fieldname: str) -> float:
    """Clamp serialization round-off; genuinely out-of-range values are unit errors."""
    v = float(value)
    tol = _RANGE_TOL * max(1.0, limit)
    if v < -tol or v > limit + tol:
        raise UnitMismatchError(
            f"video {vid!r}: field {fieldname!r} value {value} outside [0, {limit}] "
            "for the declared units"
        )
    return min(max(v, 0.0), limit)


def _check_schema(validator: jsonschema.Draft202012Validator, raw, path) -> None:
    error = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if error is not None:
        raise DumpValidationError(f"{path}: {error.json_path}: {error.message}")


def _read_json(path: str | Path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DumpValidationError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def _write_json(payload, path: str | Path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def _round6(x: float) -> float:
    return round(float(x), 6)
