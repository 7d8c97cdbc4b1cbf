"""Closed-loop simulation core.

Each simulation step takes the ego plan, detects future collisions
against the committed environment trajectories, labels each conflicting
pair's influencer and reactor, regenerates the reactor toward the
conflict point, cascades the procedure over newly created conflicts
until the scene is conflict-free, then commits and advances one step.

Resolution policy variants:
  m0    log conflicts, change nothing (no-resolution baseline)
  m1    regenerate both agents of a conflict toward the cross point
  full  relation-aware: only the reactor yields

Event kinds logged to SimState.events: conflict, relation,
forced-reactor, resolution, escalation, overshoot, conflict-ignored,
unresolved-protected, plan-change.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Set, Tuple

import numpy as np

from .geometry import (
    CrossKind,
    CrossPoint,
    PathPoint,
    cross_point,
    first_collision_step,
)
from .relation import (
    OverrideRegistry,
    PairContext,
    RelationLabel,
    RelationPredictor,
    oracle_predictor,
)
from .scenario import AgentState, Scenario, Trajectory
from .trajectory import (
    SAME_LANE_STANDOFF,
    KinematicLimits,
    RolloutResult,
    crossing_standoff,
    goal_conditioned_rollout,
    immediate_stop_rollout,
    replay_rollout,
)

__all__ = [
    "EngineError",
    "ResolutionPolicy",
    "ConflictRecord",
    "Event",
    "SimState",
    "EpisodeResult",
    "Engine",
    "run_episode",
]

POLICY_MODES = ("m0", "m1", "full")
EGO_MODES = ("authoritative", "cooperative")


class EngineError(RuntimeError):
    """Internal contract violation (e.g. the resolution bound exceeded)."""


@dataclass(frozen=True)
class ResolutionPolicy:
    mode: str = "full"
    ego_mode: str = "cooperative"

    def __post_init__(self):
        if self.mode not in POLICY_MODES:
            raise ValueError(f"unknown policy mode {self.mode!r}")
        if self.ego_mode not in EGO_MODES:
            raise ValueError(f"unknown ego mode {self.ego_mode!r}")


@dataclass(frozen=True)
class ConflictRecord:
    agent_a: str
    agent_b: str
    first_collision_step: int  # absolute future step index
    collision_point: PathPoint
    cross: Optional[CrossPoint]

    @property
    def pair(self) -> frozenset:
        return frozenset((self.agent_a, self.agent_b))


@dataclass(frozen=True)
class Event:
    step: int
    kind: str
    payload: dict

    def to_doc(self) -> dict:
        return {"step": self.step, "kind": self.kind, "payload": self.payload}


@dataclass
class SimState:
    current_step: int
    committed: Dict[str, Trajectory]
    current_states: Dict[str, AgentState]
    relevant: Set[str] = field(default_factory=set)
    events: List[Event] = field(default_factory=list)
    # False until the first ego plan arrives; the first plan of an episode
    # always runs a resolution pass (the replay init is not an ego plan).
    plan_committed: bool = False

    def log(self, kind: str, **payload) -> None:
        self.events.append(Event(self.current_step, kind, payload))


@dataclass(frozen=True)
class EpisodeResult:
    scenario_id: str
    policy: str
    ego_mode: str
    seed: int
    step_seconds: float
    ego_id: str
    agents: Dict[str, dict]  # id -> {kind, length, width}
    initial: Dict[str, AgentState]
    executed: Dict[str, Tuple[AgentState, ...]]
    futures_per_step: List[Dict[str, List[Tuple[float, float]]]]
    events: Tuple[Event, ...]
    relevant: frozenset
    map_polylines: List[dict]

    def executed_trajectory(self, agent_id: str) -> Trajectory:
        return Trajectory(0, self.executed[agent_id])

    def to_doc(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "policy": self.policy,
            "ego_mode": self.ego_mode,
            "seed": self.seed,
            "step_seconds": self.step_seconds,
            "ego_id": self.ego_id,
            "agents": self.agents,
            "initial": {
                aid: {"x": s.x, "y": s.y, "heading": s.heading, "speed": s.speed}
                for aid, s in self.initial.items()
            },
            "executed": {
                aid: [
                    {"x": s.x, "y": s.y, "heading": s.heading, "speed": s.speed}
                    for s in states
                ]
                for aid, states in self.executed.items()
            },
            "futures_per_step": [
                {aid: [[x, y] for x, y in pts] for aid, pts in step_futures.items()}
                for step_futures in self.futures_per_step
            ],
            "events": [e.to_doc() for e in self.events],
            "relevant": sorted(self.relevant),
            "map": self.map_polylines,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), indent=2, sort_keys=True)


class Engine:
    """Per-scenario simulation engine; one instance drives one episode."""

    def __init__(
        self,
        scenario: Scenario,
        policy: ResolutionPolicy = ResolutionPolicy(),
        overrides: Optional[OverrideRegistry] = None,
        predictor: Optional[RelationPredictor] = None,
        limits: Optional[KinematicLimits] = None,
    ):
        self.scenario = scenario
        self.policy = policy
        self.overrides = overrides or OverrideRegistry()
        self.predictor = predictor or oracle_predictor
        self.limits = limits or KinematicLimits()
        self.horizon = scenario.config.horizon_steps
        self.dt = scenario.config.step_seconds

    # -- setup ------------------------------------------------------------

    def initial_state(self) -> SimState:
        committed = {
            a.id: replay_rollout(a, 0) for a in self.scenario.agents
        }
        current = {a.id: a.current for a in self.scenario.agents}
        return SimState(0, committed, current)

    def _dims(self, agent_id: str) -> Tuple[float, float]:
        return self.scenario.agents_by_id[agent_id].dims

    # -- conflict detection -------------------------------------------------

    def _pair_conflict(
        self, state: SimState, id_a: str, id_b: str
    ) -> Optional[ConflictRecord]:
        traj_a = state.committed[id_a]
        traj_b = state.committed[id_b]
        rel = first_collision_step(
            traj_a, traj_b, self._dims(id_a), self._dims(id_b), 0
        )
        if rel is None:
            return None
        pa = traj_a.states[rel]
        pb = traj_b.states[rel]
        cross = cross_point(traj_a, traj_b, self._dims(id_a), self._dims(id_b))
        return ConflictRecord(
            agent_a=id_a,
            agent_b=id_b,
            first_collision_step=traj_a.start_step + rel,
            collision_point=PathPoint(0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)),
            cross=cross,
        )

    def detect_conflicts(self, plan: Trajectory, state: SimState) -> List[ConflictRecord]:
        """Conflicts of the ego plan against every committed env trajectory,
        earliest collision first (ties by env id)."""
        ego_id = self.scenario.ego_id
        previous = state.committed.get(ego_id)
        state.committed[ego_id] = plan
        records = []
        try:
            for agent in self.scenario.env_agents():
                rec = self._pair_conflict(state, ego_id, agent.id)
                if rec is not None:
                    records.append(rec)
        finally:
            if previous is not None:
                state.committed[ego_id] = previous
        records.sort(key=lambda r: (r.first_collision_step, r.agent_b))
        return records

    # -- resolution ---------------------------------------------------------

    def _relation_for(self, state: SimState, record: ConflictRecord) -> RelationLabel:
        hit = self.overrides.lookup(record.agent_a, record.agent_b)
        if hit is not None:
            return hit
        ctx = PairContext(
            record.agent_a,
            record.agent_b,
            state.committed[record.agent_a],
            state.committed[record.agent_b],
            self._dims(record.agent_a),
            self._dims(record.agent_b),
            record.cross,
        )
        return self.predictor(ctx)

    def _cruise_speed(self, state: SimState, agent_id: str) -> float:
        current = state.current_states[agent_id]
        if agent_id == self.scenario.ego_id:
            ref_max = max(s.speed for s in state.committed[agent_id].states)
        else:
            agent = self.scenario.agents_by_id[agent_id]
            ref_max = max(s.speed for s in agent.reference_future)
        return min(current.speed, ref_max)

    def _route_path(self, state: SimState, agent_id: str) -> np.ndarray:
        """Path geometry the regenerated agent keeps following."""
        current = state.current_states[agent_id]
        if agent_id == self.scenario.ego_id:
            pts = [(current.x, current.y)]
            pts.extend(
                (s.x, s.y) for s in state.committed[agent_id].states
            )
            return np.array(pts, dtype=np.float64)
        return self.scenario.agents_by_id[agent_id].reference_path()

    def _regenerate(
        self,
        state: SimState,
        agent_id: str,
        goal: PathPoint,
        kind: Optional[CrossKind],
        other_id: str,
    ) -> RolloutResult:
        if kind == CrossKind.SAME_LANE_COLLISION:
            standoff = SAME_LANE_STANDOFF
        else:
            standoff = crossing_standoff(
                self._dims(agent_id)[0], self._dims(other_id)[0]
            )
        result = goal_conditioned_rollout(
            current=state.current_states[agent_id],
            reference_path=self._route_path(state, agent_id),
            goal=goal,
            horizon_steps=self.horizon - state.current_step,
            limits=self.limits,
            step_seconds=self.dt,
            cruise_speed=self._cruise_speed(state, agent_id),
            standoff=standoff,
        )
        self._commit(state, agent_id, result)
        return result

    def _escalate(self, state: SimState, agent_id: str) -> RolloutResult:
        result = immediate_stop_rollout(
            current=state.current_states[agent_id],
            reference_path=self._route_path(state, agent_id),
            horizon_steps=self.horizon - state.current_step,
            limits=self.limits,
            step_seconds=self.dt,
        )
        self._commit(state, agent_id, result)
        state.log("escalation", agent=agent_id)
        return result

    def _commit(self, state: SimState, agent_id: str, result: RolloutResult) -> None:
        state.committed[agent_id] = result.trajectory(state.current_step)
        if result.overshoot > 0.0:
            state.log("overshoot", agent=agent_id, amount=result.overshoot)
        if agent_id != self.scenario.ego_id:
            replay = replay_rollout(
                self.scenario.agents_by_id[agent_id], state.current_step
            )
            if state.committed[agent_id].states != replay.states:
                state.relevant.add(agent_id)

    def resolve_conflict(
        self, record: ConflictRecord, state: SimState
    ) -> List[str]:
        """Resolve one conflict; returns the ids whose trajectories changed."""
        mode = self.policy.mode
        goal = record.cross.point if record.cross else record.collision_point
        kind = record.cross.kind if record.cross else CrossKind.SAME_LANE_COLLISION
        state.log(
            "conflict",
            a=record.agent_a,
            b=record.agent_b,
            collision_step=record.first_collision_step,
            point=[goal.x, goal.y],
            cross_kind=str(kind.value),
        )

        if mode == "m0":
            state.log("conflict-ignored", a=record.agent_a, b=record.agent_b)
            return []

        if mode == "m1":
            changed = []
            for aid, other in (
                (record.agent_a, record.agent_b),
                (record.agent_b, record.agent_a),
            ):
                self._regenerate(state, aid, goal, kind, other)
                changed.append(aid)
            state.log("resolution", agents=changed, goal=[goal.x, goal.y])
            return changed

        label = self._relation_for(state, record)
        ego_id = self.scenario.ego_id
        if (
            label.reactor == ego_id
            and self.policy.ego_mode == "authoritative"
            and label.source != "override"
        ):
            env_id = record.agent_b if record.agent_a == ego_id else record.agent_a
            env_kind = self.scenario.agents_by_id[env_id].kind
            ego_kind = self.scenario.agents_by_id[ego_id].kind
            if env_kind != "vehicle" and ego_kind == "vehicle":
                # Never force a pedestrian or cyclist to yield to a vehicle;
                # with the ego plan protected the conflict stays open.
                state.log(
                    "unresolved-protected", a=record.agent_a, b=record.agent_b
                )
                return []
            state.log(
                "forced-reactor",
                agent=env_id,
                oracle_influencer=label.influencer,
            )
            label = RelationLabel(ego_id, env_id, source="forced")
        state.log(
            "relation",
            influencer=label.influencer,
            reactor=label.reactor,
            source=label.source,
        )
        self._regenerate(state, label.reactor, goal, kind, label.influencer)
        state.log("resolution", agents=[label.reactor], goal=[goal.x, goal.y])
        return [label.reactor]

    def _escalate_pair(
        self, state: SimState, record: ConflictRecord, hits: int
    ) -> List[str]:
        """Escalation ladder: third conflict of a pair stops the reactor,
        the fourth stops the other agent too. Returns the changed ids."""
        if self.policy.mode == "m1":
            self._escalate(state, record.agent_a)
            self._escalate(state, record.agent_b)
            return [record.agent_a, record.agent_b]
        label = self._relation_for(state, record)
        reactor = label.reactor
        if (
            reactor == self.scenario.ego_id
            and self.policy.ego_mode == "authoritative"
            and label.source != "override"
        ):
            reactor = (
                record.agent_b
                if record.agent_a == self.scenario.ego_id
                else record.agent_a
            )
        if hits > 3:
            other = record.agent_b if reactor == record.agent_a else record.agent_a
            if (
                other == self.scenario.ego_id
                and self.policy.ego_mode == "authoritative"
            ):
                return []
            reactor = other
        self._escalate(state, reactor)
        return [reactor]

    def resolve_all(self, plan: Trajectory, state: SimState) -> SimState:
        """Commit the ego plan and cascade resolutions until conflict-free."""
        ego_id = self.scenario.ego_id
        seed_records = self.detect_conflicts(plan, state)
        state.committed[ego_id] = plan

        if self.policy.mode == "m0":
            for rec in seed_records:
                state.log(
                    "conflict",
                    a=rec.agent_a,
                    b=rec.agent_b,
                    collision_step=rec.first_collision_step,
                )
                state.log("conflict-ignored", a=rec.agent_a, b=rec.agent_b)
            return state

        # Earliest-collision-first agenda over unordered pairs.
        agenda: Dict[frozenset, ConflictRecord] = {r.pair: r for r in seed_records}
        pair_hits = defaultdict(int)
        skipped: Set[frozenset] = set()
        resolutions = 0
        bound = 4 * len(self.scenario.agents)

        while agenda:
            key = min(
                agenda,
                key=lambda k: (agenda[k].first_collision_step, tuple(sorted(k))),
            )
            record = agenda.pop(key)
            live = self._pair_conflict(state, record.agent_a, record.agent_b)
            if live is None:
                continue
            record = live
            pair_hits[key] += 1
            resolutions += 1
            if resolutions > bound:
                raise EngineError(
                    f"resolution bound exceeded ({bound}) at step {state.current_step}"
                )
            if pair_hits[key] > 4:
                # Even stopping both sides left the boxes overlapping
                # (e.g. a collision already present in the data).
                state.log("unresolved", a=record.agent_a, b=record.agent_b)
                skipped.add(key)
                continue
            if pair_hits[key] > 2:
                changed = self._escalate_pair(state, record, pair_hits[key])
                if not changed:
                    state.log("unresolved", a=record.agent_a, b=record.agent_b)
                    skipped.add(key)
                    continue
            else:
                changed = self.resolve_conflict(record, state)
                if not changed:
                    # Unresolvable under this policy (protected agent).
                    skipped.add(key)
                    continue
            for moved in changed:
                for other in self.scenario.agents:
                    if other.id == moved:
                        continue
                    pair = frozenset((moved, other.id))
                    if pair in skipped:
                        continue
                    rec = self._pair_conflict(state, moved, other.id)
                    if rec is not None:
                        agenda[pair] = rec
        return state

    # -- stepping -----------------------------------------------------------

    def plan_changed(self, plan: Trajectory, state: SimState) -> bool:
        """Pointwise position difference beyond 1 cm anywhere."""
        committed = state.committed[self.scenario.ego_id]
        if committed.start_step != plan.start_step or len(committed) != len(plan):
            return True
        delta = committed.positions() - plan.positions()
        return bool(np.max(np.abs(delta)) > 0.01)

    def step(self, state: SimState, plan: Trajectory) -> SimState:
        """Resolve (when the plan changed) and advance one step."""
        if state.current_step >= self.horizon:
            raise EngineError("episode already complete")
        remaining = self.horizon - state.current_step
        if plan.start_step != state.current_step:
            raise EngineError(
                f"plan starts at step {plan.start_step}, expected {state.current_step}"
            )
        if len(plan) < remaining:
            raise EngineError(
                f"plan covers {len(plan)} steps, episode needs {remaining}"
            )
        if not state.plan_committed or self.plan_changed(plan, state):
            state.log("plan-change")
            self.resolve_all(plan, state)
            state.plan_committed = True

        next_step = state.current_step + 1
        for aid, traj in state.committed.items():
            state.current_states[aid] = traj.states[0]
            if next_step < traj.start_step + len(traj):
                state.committed[aid] = traj.tail(next_step)
            else:
                state.committed[aid] = Trajectory(next_step, (traj.states[-1],))
        state.current_step = next_step
        return state


Planner = Callable[[Scenario, int], Trajectory]


def run_episode(
    scenario: Scenario,
    planner: Planner,
    policy: ResolutionPolicy = ResolutionPolicy(),
    seed: int = 0,
    overrides: Optional[OverrideRegistry] = None,
    predictor: Optional[RelationPredictor] = None,
    limits: Optional[KinematicLimits] = None,
) -> EpisodeResult:
    """Drive a full episode: query the planner each step, resolve, commit.

    Deterministic for a fixed (scenario, planner, policy, seed).
    """
    engine = Engine(scenario, policy, overrides, predictor, limits)
    state = engine.initial_state()
    horizon = scenario.config.horizon_steps

    executed: Dict[str, List[AgentState]] = {a.id: [] for a in scenario.agents}
    futures_per_step: List[Dict[str, List[Tuple[float, float]]]] = []

    for step_index in range(horizon):
        try:
            plan = planner(scenario, step_index)
        except Exception as exc:
            raise EngineError(
                f"planner failed at step {step_index}: {exc}"
            ) from exc
        engine.step(state, plan)
        futures_per_step.append(
            {
                aid: [(s.x, s.y) for s in traj.states]
                for aid, traj in state.committed.items()
            }
        )
        for aid in executed:
            executed[aid].append(state.current_states[aid])

    return EpisodeResult(
        scenario_id=scenario.id,
        policy=policy.mode,
        ego_mode=policy.ego_mode,
        seed=seed,
        step_seconds=scenario.config.step_seconds,
        ego_id=scenario.ego_id,
        agents={
            a.id: {"kind": a.kind, "length": a.length, "width": a.width}
            for a in scenario.agents
        },
        initial={a.id: a.current for a in scenario.agents},
        executed={aid: tuple(states) for aid, states in executed.items()},
        futures_per_step=futures_per_step,
        events=tuple(state.events),
        relevant=frozenset(state.relevant),
        map_polylines=[
            {"type": pl.type, "points": [[x, y] for x, y in pl.points]}
            for pl in scenario.map
        ],
    )
