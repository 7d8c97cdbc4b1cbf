"""Convert 10 Hz interactive scenario records to the simulator's scenario
JSON schema.

Resampling keeps every 5th source sample (10 Hz -> 2 Hz, nearest-sample
decimation, no interpolation): history indices 0/5/10 become the observed
states, indices 15, 20, ..., 90 the 16-step reference future. Agents with
any invalid sample at those indices (or missing dimensions) are dropped;
a scenario is skipped when either labeled interactive agent is dropped.
The ego is drawn from the interactive pair with a seeded RNG.
"""
from __future__ import annotations

import glob
import json
import math
import random
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

SOURCE_HZ = 10
DECIMATION = 5  # 10 Hz -> 2 Hz
STEP_SECONDS = 0.5
OBSERVED_SECONDS = 1.0
HORIZON_SECONDS = 8.0
HORIZON_STEPS = 16
CURRENT_INDEX = 10
OBSERVED_INDICES = (0, 5, 10)
FUTURE_INDICES = tuple(
    CURRENT_INDEX + DECIMATION * (j + 1) for j in range(HORIZON_STEPS)
)
AGENT_KINDS = ("vehicle", "pedestrian", "cyclist")
MAP_TYPES = ("lane", "road_edge", "crosswalk")


class RecordError(ValueError):
    """Raised when a record file cannot be converted."""


@dataclass
class ConversionManifest:
    inputs: List[str]
    output_dir: str
    converted: List[dict] = field(default_factory=list)
    skipped: List[dict] = field(default_factory=list)

    @property
    def counts(self) -> dict:
        return {
            "inputs": len(self.inputs),
            "converted": len(self.converted),
            "skipped": len(self.skipped),
        }

    def to_doc(self) -> dict:
        return {
            "inputs": self.inputs,
            "output_dir": self.output_dir,
            "converted": self.converted,
            "skipped": self.skipped,
            "counts": self.counts,
        }


def _ego_rng(seed: int, scenario_id: str) -> random.Random:
    return random.Random((seed * 0x9E3779B1) ^ zlib.crc32(scenario_id.encode()))


def _decimate_track(track: dict) -> Optional[dict]:
    """Agent document on the 2 Hz grid, or None when the track is unusable."""
    length = track.get("length")
    width = track.get("width")
    if not length or not width or length <= 0 or width <= 0:
        return None
    if track.get("object_type") not in AGENT_KINDS:
        return None
    states = track["states"]
    if len(states) <= FUTURE_INDICES[-1]:
        return None

    def state_at(idx):
        s = states[idx]
        if not s.get("valid", False):
            return None
        speed = math.hypot(s["velocity_x"], s["velocity_y"])
        return {
            "x": float(s["center_x"]),
            "y": float(s["center_y"]),
            "heading": float(s["heading"]),
            "speed": float(speed),
        }

    observed = [state_at(i) for i in OBSERVED_INDICES]
    future = [state_at(i) for i in FUTURE_INDICES]
    if any(s is None for s in observed) or any(s is None for s in future):
        return None
    return {
        "id": str(track["id"]),
        "kind": track["object_type"],
        "length": float(length),
        "width": float(width),
        "observed": observed,
        "reference_future": future,
    }


def convert_record(document: dict, seed: int) -> dict:
    """Scenario document for one source record.

    Raises RecordError when the record is malformed or the labeled
    interactive pair does not survive decimation.
    """
    try:
        scenario_id = str(document["scenario_id"])
        tracks = document["tracks"]
        interactive = [str(x) for x in document["objects_of_interest"]]
    except (KeyError, TypeError) as exc:
        raise RecordError(f"malformed record: {exc}") from exc
    if len(interactive) != 2:
        raise RecordError("record must label exactly two interactive agents")

    agents = []
    for track in tracks:
        agent = _decimate_track(track)
        if agent is not None:
            agents.append(agent)
    kept = {a["id"] for a in agents}
    missing = [x for x in interactive if x not in kept]
    if missing:
        raise RecordError(
            f"interactive agents lack full-horizon tracks: {missing}"
        )

    ego_id = _ego_rng(seed, scenario_id).choice(sorted(interactive))
    polylines = []
    for feature in document.get("map_features", []):
        if feature.get("type") in MAP_TYPES and feature.get("polyline"):
            polylines.append(
                {
                    "type": feature["type"],
                    "points": [[float(p[0]), float(p[1])] for p in feature["polyline"]],
                }
            )
    return {
        "id": scenario_id,
        "config": {
            "step_seconds": STEP_SECONDS,
            "observed_seconds": OBSERVED_SECONDS,
            "horizon_seconds": HORIZON_SECONDS,
        },
        "ego_id": ego_id,
        "map": polylines,
        "agents": agents,
    }


def convert_records(
    inputs: Sequence[str],
    output_dir,
    limit: Optional[int] = None,
    seed: int = 0,
) -> ConversionManifest:
    """Convert record files (paths or globs) into scenario JSON files."""
    paths = []
    for item in inputs:
        expanded = sorted(glob.glob(str(item)))
        if expanded:
            paths.extend(expanded)
        else:
            paths.append(str(item))
    if not paths:
        raise RecordError("no input record files given")

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = ConversionManifest(inputs=paths, output_dir=str(out))
    for path in paths:
        if limit is not None and len(manifest.converted) >= limit:
            break
        try:
            document = json.loads(Path(path).read_text(encoding="utf-8"))
            scenario = convert_record(document, seed)
        except (OSError, json.JSONDecodeError, RecordError) as exc:
            manifest.skipped.append({"path": path, "reason": str(exc)})
            continue
        target = out / f"{scenario['id']}.json"
        target.write_text(json.dumps(scenario, indent=2), encoding="utf-8")
        manifest.converted.append(
            {"path": path, "scenario_id": scenario["id"], "output": str(target)}
        )
    return manifest
