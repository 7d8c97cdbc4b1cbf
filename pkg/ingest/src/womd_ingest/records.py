"""Source record model: 10 Hz interactive driving scenario files.

A record file is one JSON document per scenario with 91 samples at 10 Hz
(1 second of history including the current sample, then 8 seconds of
future) per track, plus map polylines and the labeled interactive pair:

    {
      "scenario_id": str,
      "timestamps_seconds": [91 floats, 0.1 s apart],
      "current_time_index": 10,
      "tracks": [
        {"id": str, "object_type": "vehicle" | "pedestrian" | "cyclist",
         "length": float, "width": float,
         "states": [{"center_x", "center_y", "heading",
                     "velocity_x", "velocity_y", "valid"} x 91]}
      ],
      "map_features": [{"id": str, "type": str, "polyline": [[x, y], ...]}],
      "objects_of_interest": [str, str]
    }

`make_sample_records` writes synthetic records in this layout for tests
and demos; a fraction of tracks carry invalid samples to exercise the
converter's skipping rules.
"""
from __future__ import annotations

import json
import math
import random
from pathlib import Path
from typing import List

SOURCE_HZ = 10
SAMPLES = 91  # 11 history samples (1.0 s) + 80 future samples (8.0 s)
CURRENT_INDEX = 10


def _track(track_id, object_type, length, width, x0, y0, heading, speed,
           invalid_from=None):
    states = []
    for k in range(SAMPLES):
        t = (k - CURRENT_INDEX) / SOURCE_HZ
        valid = invalid_from is None or k < invalid_from
        states.append(
            {
                "center_x": x0 + math.cos(heading) * speed * t,
                "center_y": y0 + math.sin(heading) * speed * t,
                "heading": heading,
                "velocity_x": math.cos(heading) * speed,
                "velocity_y": math.sin(heading) * speed,
                "valid": valid,
            }
        )
    return {
        "id": track_id,
        "object_type": object_type,
        "length": length,
        "width": width,
        "states": states,
    }


def make_record(seed: int) -> dict:
    """One synthetic interactive record: a crossing pair plus background."""
    rng = random.Random(seed)
    angle = rng.uniform(math.pi / 3, 2 * math.pi / 3)
    speed_a = rng.uniform(6.0, 12.0)
    speed_b = rng.uniform(6.0, 12.0)
    t_a = rng.uniform(3.0, 5.0)
    t_b = t_a + rng.uniform(-1.0, 1.0)

    tracks = [
        _track("veh_a", "vehicle", 4.6, 2.1, -speed_a * t_a, 0.0, 0.0, speed_a),
        _track(
            "veh_b", "vehicle", 4.3, 1.9,
            -speed_b * t_b * math.cos(angle), -speed_b * t_b * math.sin(angle),
            angle, speed_b,
        ),
        _track("veh_c", "vehicle", 4.5, 2.0, 40.0, 30.0, 0.0,
               rng.uniform(5.0, 9.0)),
    ]
    if rng.random() < 0.5:
        # background pedestrian; sometimes occluded mid-horizon
        invalid_from = rng.choice([None, 60])
        tracks.append(
            _track("ped_d", "pedestrian", 0.8, 0.8, 20.0, -15.0,
                   math.pi / 2, 1.4, invalid_from=invalid_from)
        )
    timestamps = [
        round((k - CURRENT_INDEX) / SOURCE_HZ, 3) for k in range(SAMPLES)
    ]
    return {
        "scenario_id": f"rec_{seed:05d}",
        "timestamps_seconds": timestamps,
        "current_time_index": CURRENT_INDEX,
        "tracks": tracks,
        "map_features": [
            {
                "id": "lane_main",
                "type": "lane",
                "polyline": [[-120.0, 0.0], [120.0, 0.0]],
            },
            {
                "id": "lane_cross",
                "type": "lane",
                "polyline": [
                    [-120.0 * math.cos(angle), -120.0 * math.sin(angle)],
                    [120.0 * math.cos(angle), 120.0 * math.sin(angle)],
                ],
            },
        ],
        "objects_of_interest": ["veh_a", "veh_b"],
    }


def make_sample_records(out_dir, count: int, seed: int = 0) -> List[Path]:
    """Write `count` synthetic record files; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        record = make_record(seed * 1_000 + i)
        path = out / f"{record['scenario_id']}.json"
        path.write_text(json.dumps(record), encoding="utf-8")
        paths.append(path)
    return paths
