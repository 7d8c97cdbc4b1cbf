"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""
import math
import time
from collections import defaultdict

import numpy as np

from yieldsim.cli import main
from yieldsim.engine import ResolutionPolicy, run_episode
from yieldsim.geometry import (
    OrientedBox,
    PathPoint,
    boxes_overlap,
    cross_point,
    separation_margin,
)
from yieldsim.metrics import compute_metrics
from yieldsim.planners import PlannerSpec, build_planner, replay_plan
from yieldsim.relation import OverrideRegistry, infer_relation
from yieldsim.scenario import (
    AgentState,
    gen_car_following,
    gen_chain,
    gen_crossing,
    sample_car_following_scene,
    sample_chain_scene,
    sample_conflict_crossing_scene,
    sample_crossing_scene,
)
from yieldsim.trajectory import KinematicLimits, goal_conditioned_rollout, replay_rollout

from test_geometry import grid_overlap_oracle

SLOW = build_planner(PlannerSpec("slowdown", decel=1.5))
FULL_AUTH = ResolutionPolicy("full", "authoritative")


def _report(number: int, description: str, started: float) -> None:
    print(f"\n[PASS] criterion {number}: {description} ({time.perf_counter() - started:.2f}s)")


def _collision_free_suite(n: int):
    """Seeded scenes whose reference futures never collide."""
    scenes = []
    i = 0
    while len(scenes) < n:
        rng = np.random.default_rng([101, i])
        kind = i % 3
        if kind == 0:
            speed = float(rng.uniform(6.0, 14.0))
            scenes.append(
                gen_car_following(float(rng.uniform(15.0, 35.0)), speed, speed,
                                  seed=i, ego="lead")
            )
        elif kind == 1:
            scenes.append(
                gen_crossing(
                    float(rng.uniform(math.pi / 3, 2 * math.pi / 3)),
                    float(rng.uniform(4.0, 6.0)),  # early arriver clears
                    (float(rng.uniform(8.0, 12.0)), float(rng.uniform(8.0, 12.0))),
                    seed=i,
                )
            )
        else:
            scenes.append(
                gen_chain(int(rng.integers(3, 6)), float(rng.uniform(15.0, 25.0)),
                          float(rng.uniform(8.0, 12.0)), seed=i)
            )
        i += 1
    return scenes


def test_criterion_1_replay_fixed_point():
    started = time.perf_counter()
    for scenario in _collision_free_suite(50):
        result = run_episode(scenario, replay_plan, ResolutionPolicy("full"))
        metrics = compute_metrics(result, scenario)
        assert metrics.ade == 0.0
        assert metrics.fde == 0.0
        assert metrics.relevant_ratio == 0.0
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"criterion 1 runtime {elapsed:.2f}s exceeds 5s"
    _report(1, "replay fixed point on 50 collision-free scenes", started)


def test_criterion_2_task2_directional_reproduction():
    started = time.perf_counter()
    scenes = []
    for i in range(200):
        rng = np.random.default_rng([202, i])
        scenes.append(sample_car_following_scene(rng, seed=i))

    rear_scene_rate = {}
    mean_progress = {}
    for mode in ("m0", "m1", "full"):
        policy = ResolutionPolicy(mode, "authoritative")
        rear_scenes = 0
        progresses = []
        for scenario in scenes:
            result = run_episode(scenario, SLOW, policy)
            metrics = compute_metrics(result, scenario)
            if metrics.rear_rate > 0.0:
                rear_scenes += 1
            progresses.append(metrics.progress)
        rear_scene_rate[mode] = rear_scenes / len(scenes)
        mean_progress[mode] = float(np.mean(progresses))

    assert rear_scene_rate["m0"] >= 0.50, rear_scene_rate
    assert rear_scene_rate["full"] <= 0.02, rear_scene_rate
    assert rear_scene_rate["m1"] <= 0.02, rear_scene_rate
    assert mean_progress["m1"] < mean_progress["full"] < mean_progress["m0"], (
        mean_progress
    )
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"criterion 2 runtime {elapsed:.2f}s exceeds 60s"
    _report(
        2,
        f"task-2 ordering: rear {rear_scene_rate}, progress {mean_progress}",
        started,
    )


def test_criterion_3_cascade_soundness():
    started = time.perf_counter()
    overshoot_scenes = 0
    for i in range(100):
        rng = np.random.default_rng([303, i])
        scenario = sample_chain_scene(rng, seed=i)
        n_agents = len(scenario.agents)
        result = run_episode(scenario, SLOW, FULL_AUTH)
        metrics = compute_metrics(result, scenario)

        had_overshoot = any(e.kind == "overshoot" for e in result.events)
        if had_overshoot:
            overshoot_scenes += 1
        else:
            assert metrics.residual_collision_pairs == 0, scenario.id

        per_step_actions = defaultdict(int)
        for e in result.events:
            if e.kind in ("resolution", "escalation"):
                per_step_actions[e.step] += 1
        assert all(v <= 4 * n_agents for v in per_step_actions.values())

        followers = {a.id for a in scenario.agents if a.id != "ego"}
        assert result.relevant == followers, (
            f"{scenario.id}: relevant {sorted(result.relevant)} != followers"
        )
    assert overshoot_scenes < 5, f"{overshoot_scenes} scenes logged overshoots"
    _report(
        3,
        f"cascade soundness on 100 chains (overshoot scenes: {overshoot_scenes})",
        started,
    )


def test_criterion_4_relation_oracle_correctness():
    started = time.perf_counter()
    for i in range(500):
        rng = np.random.default_rng([404, i])
        scenario = sample_crossing_scene(rng, seed=i)  # |offset| in [0.5, 3]
        a = scenario.agents_by_id["a"]
        b = scenario.agents_by_id["b"]
        traj_a = replay_rollout(a, 0)
        traj_b = replay_rollout(b, 0)

        # the construction pins who reaches the origin first
        t_cross_a = min(
            range(16),
            key=lambda k: math.hypot(a.reference_future[k].x, a.reference_future[k].y),
        )
        t_cross_b = min(
            range(16),
            key=lambda k: math.hypot(b.reference_future[k].x, b.reference_future[k].y),
        )
        expected = "a" if t_cross_a < t_cross_b else "b"

        label = infer_relation(traj_a, traj_b, "a", "b", a.dims, b.dims)
        assert label.influencer == expected, scenario.id
        assert label.source == "oracle"

        # independent arrival-index computation at the known crossing (origin)
        def independent_index(agent):
            xs = [s.x for s in agent.reference_future]
            ys = [s.y for s in agent.reference_future]
            for k in range(16):
                if k + 1 < 16:
                    disp = math.hypot(xs[k + 1] - xs[k], ys[k + 1] - ys[k])
                else:
                    disp = math.hypot(xs[-1] - xs[-2], ys[-1] - ys[-2])
                if math.hypot(xs[k], ys[k]) <= max(disp, 0.5 * agent.length) + 1e-9:
                    return k
            return 16

        idx_a, idx_b = independent_index(a), independent_index(b)
        assert (idx_a < idx_b) == (expected == "a"), scenario.id
        cp = cross_point(traj_a, traj_b, a.dims, b.dims)
        assert (cp.index_a, cp.index_b) == (idx_a, idx_b), scenario.id
    _report(4, "relation oracle correct on 500 offset crossings", started)


def test_criterion_5_relation_manipulation():
    started = time.perf_counter()
    for i in range(20):
        rng = np.random.default_rng([505, i])
        scenario = sample_conflict_crossing_scene(rng, seed=i, ego_first=True)
        reference = {
            a.id: tuple(a.reference_future) for a in scenario.agents
        }

        base = run_episode(scenario, replay_plan, ResolutionPolicy("full"))
        labels = [e.payload for e in base.events if e.kind == "relation"]
        assert labels, f"{scenario.id}: no conflict found"
        influencer = labels[0]["influencer"]
        reactor = labels[0]["reactor"]
        assert base.executed[influencer] == reference[influencer]  # bitwise
        assert base.executed[reactor] != reference[reactor]

        overrides = OverrideRegistry()
        overrides.add_spec(f"{reactor}>{influencer}")
        forced = run_episode(
            scenario, replay_plan, ResolutionPolicy("full"), overrides=overrides
        )
        forced_labels = [e.payload for e in forced.events if e.kind == "relation"]
        assert {l["source"] for l in forced_labels} == {"override"}
        assert forced.executed[reactor] == reference[reactor]  # bitwise
        assert forced.executed[influencer] != reference[influencer]
    _report(5, "forced relation swaps the modified agent on 20 scenes", started)


def test_criterion_6_geometry_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(606)
    checked = 0
    for _ in range(1000):
        def rand_box():
            return OrientedBox(
                float(rng.uniform(-5.0, 5.0)),
                float(rng.uniform(-5.0, 5.0)),
                float(rng.uniform(-math.pi, math.pi)),
                float(rng.uniform(1.0, 6.0)),
                float(rng.uniform(0.5, 3.0)),
            )

        a, b = rand_box(), rand_box()
        got = boxes_overlap(a, b)
        assert got == boxes_overlap(b, a)

        theta = float(rng.uniform(-math.pi, math.pi))
        tx, ty = (float(v) for v in rng.uniform(-30.0, 30.0, size=2))
        c, s = math.cos(theta), math.sin(theta)

        def moved(box):
            return OrientedBox(
                c * box.center_x - s * box.center_y + tx,
                s * box.center_x + c * box.center_y + ty,
                box.heading + theta,
                box.length,
                box.width,
            )

        assert got == boxes_overlap(moved(a), moved(b))

        if abs(separation_margin(a, b)) >= 0.02:  # outside the 2 cm band
            checked += 1
            assert got == grid_overlap_oracle(a, b, resolution=0.01)
    assert checked >= 900  # the band exempts only a sliver of cases
    _report(
        6, f"grid-sampling oracle agreement on {checked}/1000 banded pairs", started
    )


def test_criterion_7_trajectory_generator_kinematics():
    started = time.perf_counter()
    limits = KinematicLimits()
    path = [(x, 0.0) for x in range(0, 400, 5)]
    rng = np.random.default_rng(707)
    for _ in range(100):
        v0 = float(rng.uniform(6.0, 15.0))
        ideal = v0 * v0 / (2.0 * limits.comfort_decel)
        feasible_case = bool(rng.random() < 0.5)
        if feasible_case:
            d = ideal * float(rng.uniform(1.02, 2.5))
        else:
            d = ideal * float(rng.uniform(0.3, 0.98))
        current = AgentState(0.0, 0.0, 0.0, v0)
        result = goal_conditioned_rollout(
            current, path, PathPoint(d, 0.0), 64, limits, 0.5, cruise_speed=v0,
        )
        speeds = [s.speed for s in result.states]
        assert min(speeds) >= 0.0
        if feasible_case:
            # the 2% frontier: d >= 1.02 * v0^2/(2a) must stop at the goal
            assert not result.hard_braking
            assert abs(result.final_arc - d) < 0.5
            assert result.states[-1].speed < 0.1
        else:
            # d <= 0.98 * v0^2/(2a) must take the hard-braking branch
            assert result.hard_braking
    _report(7, "stopping kinematics match v^2/(2a) within 2%", started)


def test_criterion_8_batch_determinism(tmp_path):
    started = time.perf_counter()
    outputs = []
    for name, workers in (("w1", "1"), ("w4", "4"), ("w1_again", "1")):
        out = tmp_path / name
        code = main([
            "batch", "--gen", "car-following", "--count", "6",
            "--planner", "slowdown", "--policies", "m0,m1,full",
            "--ego-mode", "authoritative", "--seed", "13",
            "--workers", workers, "--out", str(out),
        ])
        assert code == 0
        outputs.append(
            (
                (out / "report.csv").read_bytes(),
                (out / "report.json").read_bytes(),
                (out / "episodes.jsonl").read_bytes(),
            )
        )
    assert outputs[0] == outputs[1] == outputs[2]
    _report(8, "batch reports byte-identical across reruns and workers", started)
