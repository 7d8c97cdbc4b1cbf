"""Ego planners for the two evaluation tasks plus the log-replay baseline.

All planners are pure functions of (scenario, step, params): the full
plan is derived from the episode-start state and later steps return its
tail, so an engine comparing successive plans sees them unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .scenario import AgentState, Scenario, Trajectory, norm_angle
from .trajectory import PathFrame, replay_rollout

__all__ = [
    "PlannerSpec",
    "replay_plan",
    "slowdown_plan",
    "perturbed_plan",
    "build_planner",
]


@dataclass(frozen=True)
class PlannerSpec:
    kind: str  # replay | perturbed | slowdown
    decel: float = 1.5
    speed_scale: Optional[float] = None  # None: sampled per episode from seed
    lateral_sigma: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("replay", "perturbed", "slowdown"):
            raise ValueError(f"unknown planner kind {self.kind!r}")
        if self.decel <= 0.0:
            raise ValueError("decel must be positive")
        if self.speed_scale is not None and not (0.7 <= self.speed_scale <= 1.3):
            raise ValueError("speed_scale must lie in [0.7, 1.3]")
        if self.lateral_sigma < 0.0:
            raise ValueError("lateral_sigma must be nonnegative")


def replay_plan(scenario: Scenario, step: int) -> Trajectory:
    """The ego's logged future, unchanged."""
    return replay_rollout(scenario.ego, step)


def _ego_frame(scenario: Scenario) -> PathFrame:
    ego = scenario.ego
    return PathFrame(ego.reference_path(), fallback_heading=ego.current.heading)


def slowdown_plan(scenario: Scenario, step: int, decel: float = 1.5) -> Trajectory:
    """Constant-deceleration ego plan along the logged path.

    The speed profile is v(t) = max(0, v0 - decel*t), capped pointwise by
    the logged speed at the same step so the plan never exceeds the data.
    """
    if decel <= 0.0:
        raise ValueError("decel must be positive")
    ego = scenario.ego
    dt = scenario.config.step_seconds
    horizon = scenario.config.horizon_steps
    v0 = ego.current.speed
    frame = _ego_frame(scenario)
    s = frame.project(ego.current.x, ego.current.y)

    states = []
    v_prev = v0
    for j in range(horizon):
        t = (j + 1) * dt
        v = max(0.0, v0 - decel * t)
        v = min(v, ego.reference_future[j].speed)
        s += 0.5 * (v_prev + v) * dt
        x, y, heading = frame.pose_at(s)
        states.append(AgentState(x=x, y=y, heading=norm_angle(heading), speed=v))
        v_prev = v
    return Trajectory(0, tuple(states)).tail(step)


def _smooth_noise(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    """Low-frequency lateral offsets, tapered to zero at both ends."""
    if sigma == 0.0 or n == 0:
        return np.zeros(n)
    raw = rng.normal(0.0, 1.0, n + 4)
    kernel = np.array([1.0, 2.0, 3.0, 2.0, 1.0])
    kernel /= kernel.sum()
    smooth = np.convolve(raw, kernel, mode="valid")
    std = float(np.std(smooth))
    if std > 1e-12:
        smooth = smooth / std
    taper = np.sin(np.pi * (np.arange(n) + 1) / (n + 1))
    return sigma * smooth * taper


def perturbed_plan(
    scenario: Scenario,
    step: int,
    speed_scale: float = 1.0,
    lateral_sigma: float = 0.3,
    seed: int = 0,
) -> Trajectory:
    """Replay re-timed along its own path and laterally jittered.

    Stands in for a learned plan that follows the data closely but
    deviates slightly. Deterministic in the seed; with speed_scale=1 and
    lateral_sigma=0 it is exactly the replay plan.
    """
    if speed_scale == 1.0 and lateral_sigma == 0.0:
        return replay_plan(scenario, step)
    ego = scenario.ego
    horizon = scenario.config.horizon_steps
    frame = _ego_frame(scenario)

    path = ego.reference_path()
    arcs = np.concatenate(
        [[0.0], np.cumsum(np.hypot(*np.diff(path, axis=0).T))]
    )[1:]
    offsets = _smooth_noise(np.random.default_rng(seed), horizon, lateral_sigma)

    states = []
    for j in range(horizon):
        s = speed_scale * float(arcs[j])
        x, y, heading = frame.pose_at(s)
        nx, ny = -math.sin(heading), math.cos(heading)
        states.append(
            AgentState(
                x=x + nx * float(offsets[j]),
                y=y + ny * float(offsets[j]),
                heading=norm_angle(heading),
                speed=speed_scale * ego.reference_future[j].speed,
            )
        )
    return Trajectory(0, tuple(states)).tail(step)


def build_planner(spec: PlannerSpec):
    """Planner callable for run_episode from a PlannerSpec."""
    if spec.kind == "replay":
        return replay_plan
    if spec.kind == "slowdown":
        return lambda scenario, step: slowdown_plan(scenario, step, spec.decel)
    scale = spec.speed_scale
    if scale is None:
        scale = float(np.random.default_rng(spec.seed).uniform(0.85, 1.15))
    sigma = spec.lateral_sigma
    seed = spec.seed
    return lambda scenario, step: perturbed_plan(scenario, step, scale, sigma, seed)
