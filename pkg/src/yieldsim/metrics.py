"""Evaluation metrics over episode results and batch aggregation.

Per-episode: relevant ratio, ADE/FDE against the logged futures,
front/side/rear collision rates over the executed trajectories, and mean
per-agent progress. Batch reports carry the column set
{relevant_ratio, ade, fde, front, side, rear, progress}.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, fields
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .engine import EpisodeResult
from .geometry import (
    OrientedBox,
    first_collision_step,
    overlap_centroid,
)
from .scenario import Scenario, Trajectory, norm_angle

__all__ = [
    "EpisodeMetrics",
    "relevant_ratio",
    "displacement_errors",
    "collision_rates",
    "progress",
    "compute_metrics",
    "aggregate",
    "report_to_csv",
    "report_to_json",
    "REPORT_COLUMNS",
]

REPORT_COLUMNS = ("relevant_ratio", "ade", "fde", "front", "side", "rear", "progress")


@dataclass(frozen=True)
class EpisodeMetrics:
    scenario_id: str
    policy: str
    relevant_ratio: float
    ade: float
    fde: float
    front_rate: float
    side_rate: float
    rear_rate: float
    progress: float
    residual_collision_pairs: int
    ade_relevant: Optional[float] = None
    fde_relevant: Optional[float] = None

    def to_doc(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def relevant_ratio(result: EpisodeResult) -> float:
    """Modified env agents over all env agents (0 for single-agent scenes)."""
    n_env = len(result.agents) - 1
    if n_env <= 0:
        return 0.0
    return len(result.relevant) / n_env


def _agent_errors(result: EpisodeResult, scenario: Scenario, agent_id: str):
    sim = result.executed[agent_id]
    ref = scenario.agents_by_id[agent_id].reference_future
    dists = [
        math.hypot(s.x - r.x, s.y - r.y) for s, r in zip(sim, ref)
    ]
    return float(np.mean(dists)), float(dists[-1])


def displacement_errors(
    result: EpisodeResult,
    scenario: Scenario,
    only: Optional[Sequence[str]] = None,
) -> Tuple[float, float]:
    """(ADE, FDE) of simulated env trajectories against the logged futures,
    averaged over env agents (optionally a subset)."""
    ids = [a for a in result.agents if a != result.ego_id]
    if only is not None:
        ids = [a for a in ids if a in set(only)]
    if not ids:
        return 0.0, 0.0
    pairs = [_agent_errors(result, scenario, aid) for aid in ids]
    return (
        float(np.mean([p[0] for p in pairs])),
        float(np.mean([p[1] for p in pairs])),
    )


def _box_at(result: EpisodeResult, agent_id: str, step: int) -> OrientedBox:
    s = result.executed[agent_id][step]
    dims = result.agents[agent_id]
    return OrientedBox(s.x, s.y, s.heading, dims["length"], dims["width"])


def classify_collision(result: EpisodeResult, id_a: str, id_b: str, step: int) -> dict:
    """Classify one colliding pair at its first collision step.

    The striker is the agent whose front face is closest to the contact
    point (the centroid of the box overlap region); the class follows
    from the heading difference between striker and struck.
    """
    box_a = _box_at(result, id_a, step)
    box_b = _box_at(result, id_b, step)
    contact = overlap_centroid(box_a, box_b)
    if contact is None:  # touching boxes: fall back to the center midpoint
        contact_xy = (
            0.5 * (box_a.center_x + box_b.center_x),
            0.5 * (box_a.center_y + box_b.center_y),
        )
    else:
        contact_xy = (contact.x, contact.y)

    def front_ratio(box: OrientedBox) -> float:
        fwd = (contact_xy[0] - box.center_x) * math.cos(box.heading) + (
            contact_xy[1] - box.center_y
        ) * math.sin(box.heading)
        return fwd / (0.5 * box.length)

    ratio_a, ratio_b = front_ratio(box_a), front_ratio(box_b)
    if ratio_a > ratio_b or (ratio_a == ratio_b and id_a < id_b):
        striker, struck = (id_a, box_a), (id_b, box_b)
    else:
        striker, struck = (id_b, box_b), (id_a, box_a)

    phi = abs(norm_angle(struck[1].heading - striker[1].heading))
    if phi < math.pi / 4.0:
        kind = "rear"
    elif phi > 3.0 * math.pi / 4.0:
        kind = "front"
    else:
        kind = "side"
    return {
        "pair": sorted((id_a, id_b)),
        "step": step,
        "striker": striker[0],
        "class": kind,
    }


def collision_rates(
    result: EpisodeResult,
    dims: Optional[Dict[str, dict]] = None,
) -> Tuple[float, float, float, List[dict]]:
    """(front, side, rear) collision-pair rates over the executed
    trajectories, plus the per-pair classifications.

    Rates divide by the number of simulated agents (ego included).
    """
    del dims  # dimensions travel inside the result
    ids = sorted(result.agents)
    n_agents = len(ids)
    classifications = []
    for i in range(n_agents):
        for j in range(i + 1, n_agents):
            a, b = ids[i], ids[j]
            step = first_collision_step(
                Trajectory(0, result.executed[a]),
                Trajectory(0, result.executed[b]),
                (result.agents[a]["length"], result.agents[a]["width"]),
                (result.agents[b]["length"], result.agents[b]["width"]),
                0,
            )
            if step is not None:
                classifications.append(classify_collision(result, a, b, step))
    counts = {"front": 0, "side": 0, "rear": 0}
    for c in classifications:
        counts[c["class"]] += 1
    return (
        counts["front"] / n_agents,
        counts["side"] / n_agents,
        counts["rear"] / n_agents,
        classifications,
    )


def progress(result: EpisodeResult) -> float:
    """Mean per-agent traveled distance over the episode (ego included)."""
    totals = []
    for aid, states in result.executed.items():
        prev = result.initial[aid]
        dist = 0.0
        for s in states:
            dist += math.hypot(s.x - prev.x, s.y - prev.y)
            prev = s
        totals.append(dist)
    return float(np.mean(totals))


def compute_metrics(result: EpisodeResult, scenario: Scenario) -> EpisodeMetrics:
    ade, fde = displacement_errors(result, scenario)
    front, side, rear, classifications = collision_rates(result)
    if result.relevant:
        ade_rel, fde_rel = displacement_errors(result, scenario, only=result.relevant)
    else:
        ade_rel, fde_rel = None, None
    return EpisodeMetrics(
        scenario_id=result.scenario_id,
        policy=result.policy,
        relevant_ratio=relevant_ratio(result),
        ade=ade,
        fde=fde,
        front_rate=front,
        side_rate=side,
        rear_rate=rear,
        progress=progress(result),
        residual_collision_pairs=len(classifications),
        ade_relevant=ade_rel,
        fde_relevant=fde_rel,
    )


def aggregate(metrics: Sequence[EpisodeMetrics], label: str = "") -> dict:
    """Mean of each report column over the episodes, plus the count."""
    if not metrics:
        raise ValueError("cannot aggregate an empty metrics list")
    row = {
        "method": label or metrics[0].policy,
        "episodes": len(metrics),
        "relevant_ratio": float(np.mean([m.relevant_ratio for m in metrics])),
        "ade": float(np.mean([m.ade for m in metrics])),
        "fde": float(np.mean([m.fde for m in metrics])),
        "front": float(np.mean([m.front_rate for m in metrics])),
        "side": float(np.mean([m.side_rate for m in metrics])),
        "rear": float(np.mean([m.rear_rate for m in metrics])),
        "progress": float(np.mean([m.progress for m in metrics])),
    }
    return row


def report_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["method", "episodes", *REPORT_COLUMNS]
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in header])
    return buf.getvalue()


def report_to_json(rows: Sequence[dict]) -> str:
    return json.dumps({"rows": list(rows)}, indent=2, sort_keys=True)
