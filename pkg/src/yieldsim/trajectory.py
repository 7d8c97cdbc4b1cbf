"""Deterministic goal-conditioned trajectory generation.

Rollouts follow the agent's reference path geometry with a trapezoidal
speed profile: accelerate toward the cruise speed, then brake within the
comfort limit so the agent stops exactly at the goal's arc-length position
and holds there. When the goal is too close to stop comfortably, the
profile brakes at the hard limit instead and the overshoot past the goal
is reported to the caller.

Positions are integrated from the speed sequence with the trapezoid rule,
so per-step displacement and the stored speeds are exactly consistent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .geometry import PathPoint
from .scenario import AgentRecord, AgentState, ScenarioError, Trajectory, norm_angle

__all__ = [
    "KinematicLimits",
    "RolloutResult",
    "PathFrame",
    "goal_conditioned_rollout",
    "immediate_stop_rollout",
    "replay_rollout",
    "SAME_LANE_STANDOFF",
    "min_stop_distance",
]

# Stop this far short of a same-lane collision point so the reactor ends
# clear of the influencer's body instead of at its center.
SAME_LANE_STANDOFF = 2.0


def crossing_standoff(own_length: float, other_length: float) -> float:
    """Arc clearance for a reactor parking before a path crossing.

    Half of both body lengths keeps the parked reactor outside the
    influencer's swept corridor through the crossing for any crossing
    angle the generators produce.
    """
    return 0.5 * (own_length + other_length)


@dataclass(frozen=True)
class KinematicLimits:
    max_accel: float = 2.0
    comfort_decel: float = 3.0
    hard_decel: float = 6.0

    def __post_init__(self):
        if min(self.max_accel, self.comfort_decel, self.hard_decel) <= 0.0:
            raise ValueError("kinematic limits must be positive")
        if self.hard_decel < self.comfort_decel:
            raise ValueError("hard_decel must be >= comfort_decel")


@dataclass(frozen=True)
class RolloutResult:
    states: Tuple[AgentState, ...]
    goal_arc: float
    final_arc: float
    overshoot: float  # meters past the stop target; 0.0 when none
    hard_braking: bool

    def trajectory(self, start_step: int = 0) -> Trajectory:
        return Trajectory(start_step, self.states)


class PathFrame:
    """Arc-length parametrization of a polyline, with linear extrapolation
    beyond both ends."""

    def __init__(self, points: Sequence[Sequence[float]], fallback_heading: float = 0.0):
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("empty path")
        # Drop consecutive duplicates; they carry no direction.
        keep = [0]
        for i in range(1, len(pts)):
            if np.hypot(*(pts[i] - pts[keep[-1]])) > 1e-9:
                keep.append(i)
        self.points = pts[keep]
        segs = np.diff(self.points, axis=0)
        self.seg_lengths = np.hypot(segs[:, 0], segs[:, 1])
        self.arcs = np.concatenate([[0.0], np.cumsum(self.seg_lengths)])
        self.total = float(self.arcs[-1])
        if len(self.points) >= 2:
            self._headings = np.arctan2(segs[:, 1], segs[:, 0])
        else:
            self._headings = np.array([fallback_heading])

    @property
    def degenerate(self) -> bool:
        return len(self.points) < 2

    def project(self, x: float, y: float) -> float:
        """Arc-length position of the nearest point on the polyline."""
        if self.degenerate:
            return 0.0
        p = np.array([x, y])
        best_arc, best_d2 = 0.0, math.inf
        for i in range(len(self.points) - 1):
            a = self.points[i]
            d = self.points[i + 1] - a
            seg_len = self.seg_lengths[i]
            t = float(np.dot(p - a, d)) / (seg_len * seg_len)
            t = min(1.0, max(0.0, t))
            q = a + t * d
            d2 = float(np.dot(p - q, p - q))
            if d2 < best_d2:
                best_d2 = d2
                best_arc = float(self.arcs[i]) + t * seg_len
        return best_arc

    def pose_at(self, s: float) -> Tuple[float, float, float]:
        """(x, y, heading) at arc position s, extrapolating past the ends."""
        if self.degenerate:
            px, py = self.points[0]
            return float(px), float(py), float(self._headings[0])
        if s <= 0.0:
            h = self._headings[0]
            p = self.points[0] + s * np.array([math.cos(h), math.sin(h)])
            return float(p[0]), float(p[1]), float(h)
        if s >= self.total:
            h = self._headings[-1]
            p = self.points[-1] + (s - self.total) * np.array(
                [math.cos(h), math.sin(h)]
            )
            return float(p[0]), float(p[1]), float(h)
        i = int(np.searchsorted(self.arcs, s, side="right")) - 1
        i = min(i, len(self.seg_lengths) - 1)
        t = (s - self.arcs[i]) / self.seg_lengths[i]
        p = self.points[i] + t * (self.points[i + 1] - self.points[i])
        return float(p[0]), float(p[1]), float(self._headings[i])


def min_stop_distance(speed: float, decel: float, dt: float) -> float:
    """Distance covered by the discrete braking ramp speed, speed-a*dt, ..., 0
    with trapezoid displacement per step."""
    v = speed
    d = 0.0
    while v > decel * dt + 1e-12:
        nxt = v - decel * dt
        d += 0.5 * (v + nxt) * dt
        v = nxt
    d += 0.5 * v * dt
    return d


def _speed_profile_to_goal(
    v0: float,
    remaining: float,
    cruise: float,
    limits: KinematicLimits,
    dt: float,
    n_steps: int,
) -> Tuple[np.ndarray, bool]:
    """Per-step speeds that stop exactly `remaining` meters ahead.

    Returns (speeds after each step, hard_braking flag). When stopping
    within the comfort limit is infeasible from the start state, the
    profile brakes at the hard limit instead (and may overshoot).
    """
    feasible = min_stop_distance(v0, limits.comfort_decel, dt) <= remaining + 1e-9
    speeds = np.zeros(n_steps)
    v = v0
    if not feasible:
        for k in range(n_steps):
            v = max(0.0, v - limits.hard_decel * dt)
            speeds[k] = v
        return speeds, True

    a_dec = limits.comfort_decel
    s = 0.0
    for k in range(n_steps):
        rem = remaining - s
        lo = max(0.0, v - a_dec * dt)
        hi = min(cruise, v + limits.max_accel * dt)
        if hi < lo:
            hi = lo

        def reach(w: float) -> float:
            return 0.5 * (v + w) * dt + min_stop_distance(w, a_dec, dt)

        if reach(hi) <= rem + 1e-9:
            w = hi
        elif reach(lo) >= rem - 1e-9:
            w = lo
        else:
            w_lo, w_hi = lo, hi
            for _ in range(60):
                mid = 0.5 * (w_lo + w_hi)
                if reach(mid) <= rem:
                    w_lo = mid
                else:
                    w_hi = mid
            w = w_lo
        if w < 1e-9:
            w = 0.0
        s += 0.5 * (v + w) * dt
        v = w
        speeds[k] = v
    return speeds, False


def goal_conditioned_rollout(
    current: AgentState,
    reference_path: Sequence[Sequence[float]],
    goal: PathPoint,
    horizon_steps: int,
    limits: Optional[KinematicLimits] = None,
    step_seconds: float = 0.5,
    cruise_speed: Optional[float] = None,
    standoff: float = 0.0,
) -> RolloutResult:
    """Roll the agent along its reference path so it stops at the goal.

    The goal is projected onto the path (nearest point); `standoff`
    shortens the stop target along the arc. The cruise speed defaults to
    the agent's current speed.
    """
    if horizon_steps < 1:
        raise ValueError("horizon_steps must be >= 1")
    limits = limits or KinematicLimits()
    frame = PathFrame(reference_path, fallback_heading=current.heading)
    s0 = frame.project(current.x, current.y)
    s_goal = frame.project(goal.x, goal.y)
    s_target = max(s0, s_goal - standoff)
    cruise = current.speed if cruise_speed is None else cruise_speed

    speeds, hard = _speed_profile_to_goal(
        current.speed, s_target - s0, cruise, limits, step_seconds, horizon_steps
    )

    states = []
    v_prev = current.speed
    s = s0
    for k in range(horizon_steps):
        v = float(speeds[k])
        s += 0.5 * (v_prev + v) * step_seconds
        x, y, heading = frame.pose_at(s)
        states.append(AgentState(x=x, y=y, heading=norm_angle(heading), speed=v))
        v_prev = v
    overshoot = max(0.0, s - s_target)
    if overshoot < 1e-6:
        overshoot = 0.0
    return RolloutResult(
        states=tuple(states),
        goal_arc=s_target,
        final_arc=s,
        overshoot=overshoot,
        hard_braking=hard,
    )


def immediate_stop_rollout(
    current: AgentState,
    reference_path: Sequence[Sequence[float]],
    horizon_steps: int,
    limits: Optional[KinematicLimits] = None,
    step_seconds: float = 0.5,
) -> RolloutResult:
    """Brake at the hard limit to a standstill along the path.

    Used by conflict-resolution escalation: the stop target is the ramp's
    own landing point, so the result never reports an overshoot.
    """
    limits = limits or KinematicLimits()
    frame = PathFrame(reference_path, fallback_heading=current.heading)
    s0 = frame.project(current.x, current.y)
    stop_arc = s0 + min_stop_distance(current.speed, limits.hard_decel, step_seconds)

    states = []
    v = current.speed
    s = s0
    for _ in range(horizon_steps):
        nxt = max(0.0, v - limits.hard_decel * step_seconds)
        s += 0.5 * (v + nxt) * step_seconds
        v = nxt
        x, y, heading = frame.pose_at(s)
        states.append(AgentState(x=x, y=y, heading=norm_angle(heading), speed=v))
    return RolloutResult(
        states=tuple(states),
        goal_arc=stop_arc,
        final_arc=s,
        overshoot=0.0,
        hard_braking=True,
    )


def replay_rollout(agent: AgentRecord, from_step: int) -> Trajectory:
    """Tail of the agent's logged future, unmodified.

    At from_step == horizon the log is exhausted; a single held terminal
    state is returned.
    """
    horizon = len(agent.reference_future)
    if from_step < 0 or from_step > horizon:
        raise ScenarioError(
            f"replay: from_step {from_step} outside [0, {horizon}]"
        )
    if from_step == horizon:
        return Trajectory(from_step, (agent.reference_future[-1],))
    return Trajectory(from_step, agent.reference_future[from_step:])
