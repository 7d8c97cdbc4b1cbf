"""Scenario data model, JSON schema I/O, and synthetic scene generators.

Time convention used across the package: a scenario advances on a fixed
step grid. Future step j (j = 0..T-1) is the state (j+1)*step_seconds
after the episode start; the last observed state is the state at t=0.
A Trajectory with start_step=s holds states for future steps s, s+1, ...
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np

from .geometry import PathPoint

__all__ = [
    "ScenarioError",
    "SimConfig",
    "AgentState",
    "AgentRecord",
    "MapPolyline",
    "Scenario",
    "Trajectory",
    "load_scenario",
    "load_scenario_file",
    "save_scenario",
    "gen_car_following",
    "gen_crossing",
    "gen_chain",
    "sample_car_following_scene",
    "sample_crossing_scene",
    "sample_chain_scene",
    "norm_angle",
]

VEHICLE_LENGTH = 4.5
VEHICLE_WIDTH = 2.0

AGENT_KINDS = ("vehicle", "pedestrian", "cyclist")
MAP_TYPES = ("lane", "road_edge", "crosswalk")


class ScenarioError(ValueError):
    """Raised when a scenario document violates the schema or an invariant."""


def norm_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class SimConfig:
    step_seconds: float = 0.5
    observed_seconds: float = 1.0
    horizon_seconds: float = 8.0

    def __post_init__(self):
        if self.step_seconds <= 0.0:
            raise ScenarioError("config: step_seconds must be positive")
        steps = self.horizon_seconds / self.step_seconds
        if self.horizon_seconds <= 0.0 or abs(steps - round(steps)) > 1e-9:
            raise ScenarioError(
                "config: horizon_seconds must be a positive multiple of step_seconds"
            )

    @property
    def horizon_steps(self) -> int:
        return round(self.horizon_seconds / self.step_seconds)

    @property
    def observed_steps(self) -> int:
        """Number of history samples, current state included."""
        return round(self.observed_seconds / self.step_seconds) + 1


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    heading: float
    speed: float

    def __post_init__(self):
        if self.speed < 0.0:
            raise ScenarioError("state: speed must be nonnegative")
        if not all(
            math.isfinite(v) for v in (self.x, self.y, self.heading, self.speed)
        ):
            raise ScenarioError("state: values must be finite")


@dataclass(frozen=True)
class MapPolyline:
    type: str
    points: Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class AgentRecord:
    id: str
    kind: str
    length: float
    width: float
    observed: Tuple[AgentState, ...]
    reference_future: Tuple[AgentState, ...]

    @property
    def dims(self) -> Tuple[float, float]:
        return (self.length, self.width)

    @property
    def current(self) -> AgentState:
        """State at t=0 (last observed)."""
        return self.observed[-1]

    @property
    def goal(self) -> PathPoint:
        """Intended long-term goal: the final logged future position."""
        last = self.reference_future[-1]
        return PathPoint(last.x, last.y)

    def reference_path(self) -> np.ndarray:
        """Route geometry from the log: current position plus future positions."""
        pts = [(self.current.x, self.current.y)]
        pts.extend((s.x, s.y) for s in self.reference_future)
        return np.array(pts, dtype=np.float64)


@dataclass(frozen=True)
class Trajectory:
    """Kinematic states on the step grid, starting at future step start_step."""

    start_step: int
    states: Tuple[AgentState, ...]

    def __post_init__(self):
        if len(self.states) == 0:
            raise ScenarioError("trajectory: must be nonempty")

    def __len__(self) -> int:
        return len(self.states)

    @cached_property
    def _xyh(self) -> np.ndarray:
        return np.array(
            [(s.x, s.y, s.heading) for s in self.states], dtype=np.float64
        )

    def xyh(self) -> np.ndarray:
        """(n, 3) array of x, y, heading; cached."""
        return self._xyh

    def positions(self) -> np.ndarray:
        return self._xyh[:, :2]

    def tail(self, start_step: int) -> "Trajectory":
        """Sub-trajectory from the given absolute future step onward."""
        offset = start_step - self.start_step
        if offset < 0 or offset >= len(self.states):
            raise ScenarioError(
                f"trajectory: step {start_step} outside "
                f"[{self.start_step}, {self.start_step + len(self.states) - 1}]"
            )
        return Trajectory(start_step, self.states[offset:])


@dataclass(frozen=True)
class Scenario:
    id: str
    config: SimConfig
    ego_id: str
    map: Tuple[MapPolyline, ...]
    agents: Tuple[AgentRecord, ...]

    @cached_property
    def agents_by_id(self) -> Dict[str, AgentRecord]:
        return {a.id: a for a in self.agents}

    @property
    def ego(self) -> AgentRecord:
        return self.agents_by_id[self.ego_id]

    def env_agents(self) -> List[AgentRecord]:
        return [a for a in self.agents if a.id != self.ego_id]


def _validate(scenario: Scenario) -> Scenario:
    ids = [a.id for a in scenario.agents]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ScenarioError(f"duplicate agent ids: {dupes}")
    if scenario.ego_id not in ids:
        raise ScenarioError(f"missing ego: agent {scenario.ego_id!r} not present")
    horizon = scenario.config.horizon_steps
    for agent in scenario.agents:
        if agent.kind not in AGENT_KINDS:
            raise ScenarioError(
                f"schema: agent {agent.id!r} has unknown kind {agent.kind!r}"
            )
        if agent.length <= 0.0 or agent.width <= 0.0:
            raise ScenarioError(
                f"schema: agent {agent.id!r} must have positive dimensions"
            )
        if len(agent.observed) == 0:
            raise ScenarioError(f"schema: agent {agent.id!r} has empty history")
        if len(agent.reference_future) != horizon:
            raise ScenarioError(
                f"length mismatch: agent {agent.id!r} reference_future has "
                f"{len(agent.reference_future)} states, expected {horizon}"
            )
    return scenario


def _state_from_doc(doc: dict, where: str) -> AgentState:
    try:
        return AgentState(
            x=float(doc["x"]),
            y=float(doc["y"]),
            heading=float(doc["heading"]),
            speed=float(doc["speed"]),
        )
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"schema: malformed state in {where}: {exc}") from exc


def load_scenario(document: str) -> Scenario:
    """Parse and validate a scenario JSON document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"schema: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("schema: top level must be an object")
    for key in ("id", "config", "ego_id", "agents"):
        if key not in doc:
            raise ScenarioError(f"schema: missing top-level field {key!r}")
    cfg_doc = doc["config"]
    try:
        config = SimConfig(
            step_seconds=float(cfg_doc["step_seconds"]),
            observed_seconds=float(cfg_doc["observed_seconds"]),
            horizon_seconds=float(cfg_doc["horizon_seconds"]),
        )
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"schema: malformed config: {exc}") from exc

    polylines = []
    for i, pl in enumerate(doc.get("map", [])):
        try:
            polylines.append(
                MapPolyline(
                    type=str(pl["type"]),
                    points=tuple((float(p[0]), float(p[1])) for p in pl["points"]),
                )
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ScenarioError(f"schema: malformed map polyline {i}: {exc}") from exc

    agents = []
    for a in doc["agents"]:
        if not isinstance(a, dict) or "id" not in a:
            raise ScenarioError("schema: agent entries must be objects with an id")
        aid = str(a["id"])
        try:
            agents.append(
                AgentRecord(
                    id=aid,
                    kind=str(a["kind"]),
                    length=float(a["length"]),
                    width=float(a["width"]),
                    observed=tuple(
                        _state_from_doc(s, f"agent {aid!r} observed")
                        for s in a["observed"]
                    ),
                    reference_future=tuple(
                        _state_from_doc(s, f"agent {aid!r} reference_future")
                        for s in a["reference_future"]
                    ),
                )
            )
        except KeyError as exc:
            raise ScenarioError(f"schema: agent {aid!r} missing field {exc}") from exc

    scenario = Scenario(
        id=str(doc["id"]),
        config=config,
        ego_id=str(doc["ego_id"]),
        map=tuple(polylines),
        agents=tuple(agents),
    )
    return _validate(scenario)


def load_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())


def _state_doc(s: AgentState) -> dict:
    return {"x": s.x, "y": s.y, "heading": s.heading, "speed": s.speed}


def save_scenario(scenario: Scenario) -> str:
    """Serialize to the published JSON schema (round-trips exactly)."""
    doc = {
        "id": scenario.id,
        "config": {
            "step_seconds": scenario.config.step_seconds,
            "observed_seconds": scenario.config.observed_seconds,
            "horizon_seconds": scenario.config.horizon_seconds,
        },
        "ego_id": scenario.ego_id,
        "map": [
            {"type": pl.type, "points": [[x, y] for x, y in pl.points]}
            for pl in scenario.map
        ],
        "agents": [
            {
                "id": a.id,
                "kind": a.kind,
                "length": a.length,
                "width": a.width,
                "observed": [_state_doc(s) for s in a.observed],
                "reference_future": [_state_doc(s) for s in a.reference_future],
            }
            for a in scenario.agents
        ],
    }
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# Synthetic generators (straight-lane desk-scale scenes)


def _straight_agent(
    agent_id: str,
    start_x: float,
    start_y: float,
    heading: float,
    speed: float,
    config: SimConfig,
    length: float = VEHICLE_LENGTH,
    width: float = VEHICLE_WIDTH,
) -> AgentRecord:
    """Constant-speed agent on a straight path through its start pose."""
    heading = norm_angle(heading)
    dx, dy = math.cos(heading), math.sin(heading)
    dt = config.step_seconds

    def at(t: float) -> AgentState:
        return AgentState(
            x=start_x + dx * speed * t,
            y=start_y + dy * speed * t,
            heading=heading,
            speed=speed,
        )

    observed = tuple(
        at(-(config.observed_steps - 1 - k) * dt) for k in range(config.observed_steps)
    )
    future = tuple(at((j + 1) * dt) for j in range(config.horizon_steps))
    return AgentRecord(
        id=agent_id,
        kind="vehicle",
        length=length,
        width=width,
        observed=observed,
        reference_future=future,
    )


def _lane_polyline(x0: float, y0: float, heading: float, span: float) -> MapPolyline:
    dx, dy = math.cos(heading), math.sin(heading)
    return MapPolyline(
        type="lane",
        points=((x0 - dx * span, y0 - dy * span), (x0 + dx * span, y0 + dy * span)),
    )


def gen_car_following(
    gap: float,
    lead_speed: float,
    follow_speed: float,
    seed: int = 0,
    ego: str = "lead",
    config: Optional[SimConfig] = None,
) -> Scenario:
    """Two vehicles on one straight lane, `gap` meters between centers.

    Reference futures are constant-speed continuations; deterministic in
    all arguments (the seed only names the scene).
    """
    if gap <= 0.0:
        raise ValueError("gap must be positive")
    if ego not in ("lead", "follow"):
        raise ValueError("ego must be 'lead' or 'follow'")
    config = config or SimConfig()
    lead = _straight_agent("lead", gap, 0.0, 0.0, lead_speed, config)
    follow = _straight_agent("follow", 0.0, 0.0, 0.0, follow_speed, config)
    span = gap + max(lead_speed, follow_speed) * config.horizon_seconds + 20.0
    return _validate(
        Scenario(
            id=f"car-following-{seed}",
            config=config,
            ego_id=ego,
            map=(_lane_polyline(0.0, 0.0, 0.0, span),),
            agents=(lead, follow),
        )
    )


def gen_crossing(
    angle: float,
    arrival_offset: float,
    speeds: Tuple[float, float] = (10.0, 10.0),
    seed: int = 0,
    config: Optional[SimConfig] = None,
) -> Scenario:
    """Two agents on straight paths that intersect at the origin.

    Agent "a" reaches the origin `arrival_offset` seconds before agent
    "b" under the reference futures. The base arrival time is chosen so
    both agents cross within the horizon.
    """
    if not (0.0 < abs(angle) < math.pi):
        raise ValueError("angle must lie in (0, pi) in magnitude")
    config = config or SimConfig()
    speed_a, speed_b = speeds
    # The earlier agent reaches the origin exactly on a sample step, so
    # near-simultaneous arrivals produce a box overlap at a sampled time.
    t_a = 3.0 + max(0.0, -arrival_offset)
    t_b = t_a + arrival_offset
    a = _straight_agent("a", -speed_a * t_a, 0.0, 0.0, speed_a, config)
    b = _straight_agent(
        "b",
        -speed_b * t_b * math.cos(angle),
        -speed_b * t_b * math.sin(angle),
        angle,
        speed_b,
        config,
    )
    span = max(speed_a, speed_b) * (config.horizon_seconds + max(t_a, t_b)) + 20.0
    return _validate(
        Scenario(
            id=f"crossing-{seed}",
            config=config,
            ego_id="a",
            map=(
                _lane_polyline(0.0, 0.0, 0.0, span),
                _lane_polyline(0.0, 0.0, angle, span),
            ),
            agents=(a, b),
        )
    )


def gen_chain(
    n_agents: int,
    gap: float,
    speed: float,
    seed: int = 0,
    config: Optional[SimConfig] = None,
) -> Scenario:
    """Ego leading a platoon of followers spaced `gap` meters apart."""
    if n_agents < 2:
        raise ValueError("chain needs at least two agents")
    if gap <= 0.0:
        raise ValueError("gap must be positive")
    config = config or SimConfig()
    agents = [_straight_agent("ego", 0.0, 0.0, 0.0, speed, config)]
    for i in range(1, n_agents):
        agents.append(_straight_agent(f"f{i}", -i * gap, 0.0, 0.0, speed, config))
    span = n_agents * gap + speed * config.horizon_seconds + 20.0
    return _validate(
        Scenario(
            id=f"chain-{seed}",
            config=config,
            ego_id="ego",
            map=(_lane_polyline(0.0, 0.0, 0.0, span),),
            agents=tuple(agents),
        )
    )


# ---------------------------------------------------------------------------
# Seeded suite samplers (batch evaluation and acceptance suites)


def sample_car_following_scene(rng: np.random.Generator, seed: int = 0) -> Scenario:
    """Task-2 style scene: ego leads at a common speed, follower behind."""
    gap = float(rng.uniform(15.0, 35.0))
    speed = float(rng.uniform(8.0, 14.0))
    return gen_car_following(gap, speed, speed, seed=seed, ego="lead")


def sample_crossing_scene(
    rng: np.random.Generator,
    seed: int = 0,
    min_offset: float = 0.5,
    max_offset: float = 3.0,
) -> Scenario:
    """Crossing scene with a clearly earlier arriver (offset well off zero)."""
    angle = float(rng.uniform(math.pi / 6.0, 5.0 * math.pi / 6.0))
    speeds = (float(rng.uniform(6.0, 14.0)), float(rng.uniform(6.0, 14.0)))
    offset = float(rng.uniform(min_offset, max_offset))
    if rng.random() < 0.5:
        offset = -offset
    return gen_crossing(angle, offset, speeds, seed=seed)


def sample_conflict_crossing_scene(
    rng: np.random.Generator,
    seed: int = 0,
    ego_first: Optional[bool] = None,
) -> Scenario:
    """Crossing scene whose reference futures actually collide at the origin.

    ego_first pins which agent reaches the crossing earlier (the ego is
    agent "a"); None draws the order at random.
    """
    angle = float(rng.uniform(math.pi / 3.0, 2.0 * math.pi / 3.0))
    speeds = (float(rng.uniform(7.0, 10.0)), float(rng.uniform(7.0, 10.0)))
    offset = float(rng.uniform(0.1, 0.3))
    flip = rng.random() < 0.5 if ego_first is None else not ego_first
    if flip:
        offset = -offset
    return gen_crossing(angle, offset, speeds, seed=seed)


def sample_chain_scene(rng: np.random.Generator, seed: int = 0) -> Scenario:
    """Platoon scene sized so a stopping ego engages every follower."""
    n_agents = int(rng.integers(3, 11))
    gap = float(rng.uniform(10.0, 15.0))
    speed = float(rng.uniform(10.0, 13.0))
    return gen_chain(n_agents, gap, speed, seed=seed)
