import math

import pytest

from yieldsim.engine import (
    Engine,
    EngineError,
    ResolutionPolicy,
    run_episode,
)
from yieldsim.geometry import first_collision_step
from yieldsim.planners import PlannerSpec, build_planner, replay_plan
from yieldsim.relation import OverrideRegistry, RelationLabel
from yieldsim.scenario import (
    Trajectory,
    gen_car_following,
    gen_chain,
    gen_crossing,
)
from yieldsim.trajectory import replay_rollout

SLOW = build_planner(PlannerSpec("slowdown", decel=1.5))


def executed_pairwise_collisions(result):
    ids = sorted(result.agents)
    hits = []
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            a, b = ids[i], ids[j]
            step = first_collision_step(
                Trajectory(0, result.executed[a]),
                Trajectory(0, result.executed[b]),
                (result.agents[a]["length"], result.agents[a]["width"]),
                (result.agents[b]["length"], result.agents[b]["width"]),
                0,
            )
            if step is not None:
                hits.append((a, b, step))
    return hits


class TestDetectConflicts:
    def test_constant_gap_is_conflict_free(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        engine = Engine(s)
        state = engine.initial_state()
        assert engine.detect_conflicts(replay_plan(s, 0), state) == []

    def test_closing_follower_ego_sees_one_conflict(self):
        s = gen_car_following(15.0, 5.0, 12.0, ego="follow")
        engine = Engine(s)
        state = engine.initial_state()
        records = engine.detect_conflicts(replay_plan(s, 0), state)
        assert len(records) == 1
        rec = records[0]
        assert {rec.agent_a, rec.agent_b} == {"follow", "lead"}
        assert rec.first_collision_step == 2

    def test_chain_sees_only_direct_conflict(self):
        # gap sized so the rear agent never reaches the stopped ego within
        # the horizon: only (ego, f1) is an ego conflict; any (f1, f2)
        # interaction belongs to the cascade
        s = gen_chain(3, 30.0, 10.0)
        engine = Engine(s, ResolutionPolicy("full", "authoritative"))
        state = engine.initial_state()
        plan = SLOW(s, 0)
        records = engine.detect_conflicts(plan, state)
        assert [r.agent_b for r in records] == ["f1"]

    def test_sorted_by_collision_step(self):
        s = gen_chain(4, 10.0, 12.0)
        engine = Engine(s)
        state = engine.initial_state()
        plan = SLOW(s, 0)
        records = engine.detect_conflicts(plan, state)
        steps = [r.first_collision_step for r in records]
        assert steps == sorted(steps)


class TestResolveConflict:
    def _setup(self, mode, ego_mode="authoritative"):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        engine = Engine(s, ResolutionPolicy(mode, ego_mode))
        state = engine.initial_state()
        plan = SLOW(s, 0)
        records = engine.detect_conflicts(plan, state)
        state.committed["lead"] = plan
        assert records, "slowdown must induce a rear conflict"
        return s, engine, state, records[0]

    def test_full_reactor_regenerated_influencer_untouched(self):
        s, engine, state, record = self._setup("full")
        before_lead = state.committed["lead"]
        changed = engine.resolve_conflict(record, state)
        assert changed == ["follow"]
        assert state.committed["lead"] is before_lead  # bitwise unchanged
        assert state.committed["follow"].states != replay_rollout(
            s.agents_by_id["follow"], 0
        ).states
        # follower now stops behind the ego
        assert (
            first_collision_step(
                state.committed["lead"], state.committed["follow"],
                s.agents_by_id["lead"].dims, s.agents_by_id["follow"].dims, 0,
            )
            is None
        )

    def test_m1_regenerates_both(self):
        s, engine, state, record = self._setup("m1")
        changed = engine.resolve_conflict(record, state)
        assert sorted(changed) == ["follow", "lead"]

    def test_m0_changes_nothing(self):
        s, engine, state, record = self._setup("m0")
        follow_before = state.committed["follow"]
        changed = engine.resolve_conflict(record, state)
        assert changed == []
        assert state.committed["follow"] is follow_before

    def test_m1_rollout_cuts_ego_arc_vs_full(self):
        # one resolution under m1 regenerates the ego toward the collision
        # point, so its committed rollout travels less than the full-policy
        # plan (which the full policy leaves untouched)
        s, engine, state, record = self._setup("m1")
        plan_reach = state.committed["lead"].positions()[-1][0]
        engine.resolve_conflict(record, state)
        m1_reach = state.committed["lead"].positions()[-1][0]
        assert m1_reach < plan_reach


class TestResolveAllCascade:
    def test_three_agent_chain_cascades(self):
        s = gen_chain(3, 12.0, 10.0)
        engine = Engine(s, ResolutionPolicy("full", "authoritative"))
        state = engine.initial_state()
        engine.resolve_all(SLOW(s, 0), state)
        assert state.relevant == {"f1", "f2"}
        resolutions = [e for e in state.events if e.kind == "resolution"]
        assert len(resolutions) >= 2
        # final committed set is pairwise conflict-free
        ids = [a.id for a in s.agents]
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                assert (
                    first_collision_step(
                        state.committed[ids[i]], state.committed[ids[j]],
                        s.agents_by_id[ids[i]].dims, s.agents_by_id[ids[j]].dims, 0,
                    )
                    is None
                )

    def test_no_conflict_scene_is_untouched(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        engine = Engine(s)
        state = engine.initial_state()
        engine.resolve_all(replay_plan(s, 0), state)
        assert state.relevant == set()
        assert [e for e in state.events if e.kind != "plan-change"] == []

    def test_m1_cascade_is_also_conflict_free(self):
        s = gen_chain(4, 12.0, 10.0)
        engine = Engine(s, ResolutionPolicy("m1", "authoritative"))
        state = engine.initial_state()
        engine.resolve_all(SLOW(s, 0), state)
        overshooters = {
            e.payload["agent"] for e in state.events if e.kind == "overshoot"
        }
        ids = [a.id for a in s.agents]
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                if {ids[i], ids[j]} & overshooters:
                    continue
                assert (
                    first_collision_step(
                        state.committed[ids[i]], state.committed[ids[j]],
                        s.agents_by_id[ids[i]].dims, s.agents_by_id[ids[j]].dims, 0,
                    )
                    is None
                )

    def test_ten_agent_chain_bounded(self):
        s = gen_chain(10, 11.0, 12.0)
        engine = Engine(s, ResolutionPolicy("full", "authoritative"))
        state = engine.initial_state()
        engine.resolve_all(SLOW(s, 0), state)
        resolutions = [e for e in state.events if e.kind == "resolution"]
        assert len(resolutions) <= 4 * len(s.agents)
        assert state.relevant == {f"f{i}" for i in range(1, 10)}


class TestStep:
    def test_identical_plan_skips_resolution(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        engine = Engine(s)
        state = engine.initial_state()
        engine.step(state, replay_plan(s, 0))
        events_after_first = len(state.events)
        engine.step(state, replay_plan(s, 1))  # same plan, one step later
        assert len(state.events) == events_after_first
        assert state.current_step == 2

    def test_subcentimeter_jitter_does_not_retrigger_resolution(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        engine = Engine(s)
        state = engine.initial_state()
        engine.step(state, replay_plan(s, 0))
        events_before = len(state.events)
        base = replay_plan(s, 1)
        jittered = Trajectory(
            1,
            tuple(
                type(st)(st.x + 0.005, st.y, st.heading, st.speed)
                for st in base.states
            ),
        )
        engine.step(state, jittered)
        assert len(state.events) == events_before

    def test_changed_plan_without_conflicts_commits_env_unchanged(self):
        s = gen_car_following(60.0, 10.0, 10.0, ego="lead")
        engine = Engine(s, ResolutionPolicy("full", "authoritative"))
        state = engine.initial_state()
        follow_replay = state.committed["follow"]
        engine.step(state, SLOW(s, 0))  # changed plan, gap too wide to conflict
        assert any(e.kind == "plan-change" for e in state.events)
        assert not any(e.kind == "conflict" for e in state.events)
        assert state.committed["follow"].states == follow_replay.states[1:]
        assert state.relevant == set()

    def test_advance_adopts_committed_state(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        engine = Engine(s)
        state = engine.initial_state()
        first_future = s.agents_by_id["lead"].reference_future[0]
        engine.step(state, replay_plan(s, 0))
        assert state.current_states["lead"] == first_future

    def test_wrong_start_step_rejected(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        engine = Engine(s)
        state = engine.initial_state()
        with pytest.raises(EngineError, match="starts at step"):
            engine.step(state, replay_plan(s, 3))

    def test_short_plan_rejected(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        engine = Engine(s)
        state = engine.initial_state()
        full = replay_plan(s, 0)
        short = Trajectory(0, full.states[:10])
        with pytest.raises(EngineError, match="covers"):
            engine.step(state, short)

    def test_changed_plan_with_conflict_updates_env_before_advance(self):
        s = gen_car_following(18.0, 9.0, 9.0, ego="lead")
        engine = Engine(s, ResolutionPolicy("full", "authoritative"))
        state = engine.initial_state()
        engine.step(state, SLOW(s, 0))
        assert "follow" in state.relevant
        # post-step gap stays positive through the episode
        for c in range(1, 16):
            engine.step(state, SLOW(s, c))
        gap = state.current_states["lead"].x - state.current_states["follow"].x
        assert gap > 4.5


class TestRunEpisode:
    def test_replay_fixed_point(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        result = run_episode(s, replay_plan, ResolutionPolicy("full"))
        for agent in s.agents:
            assert result.executed[agent.id] == agent.reference_future
        assert result.relevant == frozenset()

    def test_full_resolves_slowdown_scene(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        result = run_episode(s, SLOW, ResolutionPolicy("full", "authoritative"))
        assert executed_pairwise_collisions(result) == []
        assert result.relevant == frozenset({"follow"})

    def test_m0_records_rear_collision(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        result = run_episode(s, SLOW, ResolutionPolicy("m0", "authoritative"))
        hits = executed_pairwise_collisions(result)
        assert len(hits) == 1
        # m0 leaves every env agent on its replay rollout
        follow = s.agents_by_id["follow"]
        assert result.executed["follow"] == follow.reference_future
        assert result.relevant == frozenset()

    def test_determinism(self):
        s = gen_chain(5, 12.0, 11.0)
        r1 = run_episode(s, SLOW, ResolutionPolicy("full", "authoritative"), seed=3)
        r2 = run_episode(s, SLOW, ResolutionPolicy("full", "authoritative"), seed=3)
        assert r1.to_json() == r2.to_json()

    def test_planner_failure_carries_step_context(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")

        def broken(scenario, step):
            if step == 3:
                raise RuntimeError("boom")
            return replay_plan(scenario, step)

        with pytest.raises(EngineError, match="step 3"):
            run_episode(s, broken)

    def test_constant_predictor_still_terminates(self):
        # "ego always influencer" plugged into the engine
        s = gen_chain(4, 12.0, 10.0)

        def ego_first(ctx) -> RelationLabel:
            if s.ego_id in (ctx.id_a, ctx.id_b):
                other = ctx.id_b if ctx.id_a == s.ego_id else ctx.id_a
                return RelationLabel(s.ego_id, other, source="predictor")
            return RelationLabel(min(ctx.id_a, ctx.id_b), max(ctx.id_a, ctx.id_b),
                                 source="predictor")

        result = run_episode(
            s, SLOW, ResolutionPolicy("full", "cooperative"), predictor=ego_first
        )
        overshoot_pairs = {e.payload["agent"] for e in result.events
                           if e.kind == "overshoot"}
        hits = executed_pairwise_collisions(result)
        assert all(a in overshoot_pairs or b in overshoot_pairs for a, b, _ in hits)

    def test_forced_reactor_logged_in_authoritative_mode(self):
        # ego arrives later: the oracle would make the ego yield
        s = gen_crossing(math.pi / 2, -0.2, (8.0, 8.0))
        result = run_episode(
            s, replay_plan, ResolutionPolicy("full", "authoritative")
        )
        kinds = {e.kind for e in result.events}
        assert "forced-reactor" in kinds
        assert result.executed["a"] == s.agents_by_id["a"].reference_future


class TestOverridesInEngine:
    def test_override_on_nonconflicting_pair_is_inert(self):
        s = gen_car_following(20.0, 10.0, 10.0, ego="lead")
        reg = OverrideRegistry()
        reg.add_spec("follow>lead")
        base = run_episode(s, replay_plan, ResolutionPolicy("full"))
        with_override = run_episode(
            s, replay_plan, ResolutionPolicy("full"), overrides=reg
        )
        assert base.to_json() == with_override.to_json()
