"""Command-line entry points: single runs, batch sweeps, trace rendering.

Exit codes: 0 success, 2 usage error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from .engine import ResolutionPolicy, run_episode
from .metrics import (
    EpisodeMetrics,
    aggregate,
    compute_metrics,
    report_to_csv,
    report_to_json,
)
from .planners import PlannerSpec, build_planner
from .relation import OverrideRegistry
from .render import write_frames
from .scenario import (
    Scenario,
    gen_car_following,
    gen_chain,
    gen_crossing,
    load_scenario,
    load_scenario_file,
    sample_car_following_scene,
    sample_chain_scene,
    sample_crossing_scene,
    save_scenario,
)

GENERATORS = ("car-following", "crossing", "chain")


def _override_spec(value: str) -> str:
    try:
        OverrideRegistry.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return value


def _default_out() -> str:
    return os.environ.get("YIELDSIM_OUT", "out")


def _add_planner_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--planner", choices=("replay", "perturbed", "slowdown"), default="replay"
    )
    parser.add_argument("--decel", type=float, default=1.5,
                        help="slowdown deceleration in m/s^2")
    parser.add_argument("--speed-scale", type=float, default=None,
                        help="perturbed re-timing factor (default: sampled from seed)")
    parser.add_argument("--lateral-sigma", type=float, default=0.3)


def _add_policy_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--policy", choices=("m0", "m1", "full"), default="full")
    parser.add_argument(
        "--ego-mode", choices=("authoritative", "cooperative"), default="cooperative"
    )


def _add_gen_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gen", choices=GENERATORS, default=None,
                        help="generate the scenario instead of loading one")
    parser.add_argument("--gap", type=float, default=20.0)
    parser.add_argument("--lead-speed", type=float, default=10.0)
    parser.add_argument("--follow-speed", type=float, default=10.0)
    parser.add_argument("--ego-role", choices=("lead", "follow"), default="lead")
    parser.add_argument("--angle-deg", type=float, default=90.0)
    parser.add_argument("--offset", type=float, default=0.0,
                        help="crossing arrival offset in seconds")
    parser.add_argument("--speeds", type=float, nargs=2, default=(10.0, 10.0))
    parser.add_argument("--n-agents", type=int, default=3)
    parser.add_argument("--speed", type=float, default=10.0)


def _scenario_from_args(args) -> Scenario:
    if args.scenario is not None and args.gen is not None:
        raise SystemExit2("pass either --scenario or --gen, not both")
    if args.scenario is not None:
        return load_scenario_file(args.scenario)
    if args.gen is None:
        raise SystemExit2("a scenario source is required: --scenario or --gen")
    if args.gen == "car-following":
        return gen_car_following(
            args.gap, args.lead_speed, args.follow_speed,
            seed=args.seed, ego=args.ego_role,
        )
    if args.gen == "crossing":
        return gen_crossing(
            math.radians(args.angle_deg), args.offset, tuple(args.speeds),
            seed=args.seed,
        )
    return gen_chain(args.n_agents, args.gap, args.speed, seed=args.seed)


class SystemExit2(Exception):
    """Usage error discovered after argparse; exits with code 2."""


def _planner_spec(args, seed: int) -> PlannerSpec:
    return PlannerSpec(
        kind=args.planner,
        decel=args.decel,
        speed_scale=args.speed_scale,
        lateral_sigma=args.lateral_sigma,
        seed=seed,
    )


def _overrides_from(specs: Optional[List[str]]) -> OverrideRegistry:
    registry = OverrideRegistry()
    for spec in specs or []:
        registry.add_spec(spec)
    return registry


def cmd_run(args) -> int:
    scenario = _scenario_from_args(args)
    policy = ResolutionPolicy(args.policy, args.ego_mode)
    planner = build_planner(_planner_spec(args, args.seed))
    overrides = _overrides_from(args.force_relation)
    result = run_episode(
        scenario, planner, policy, seed=args.seed, overrides=overrides
    )
    episode_metrics = compute_metrics(result, scenario)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{scenario.id}__{policy.mode}"
    trace_path = out / f"{stem}__trace.json"
    metrics_path = out / f"{stem}__metrics.json"
    trace_path.write_text(result.to_json(), encoding="utf-8")
    metrics_path.write_text(
        json.dumps(episode_metrics.to_doc(), indent=2, sort_keys=True),
        encoding="utf-8",
    )
    print(f"wrote {trace_path}")
    print(f"wrote {metrics_path}")
    return 0


def _batch_scenarios(args) -> List[Scenario]:
    if args.scenario_dir is not None:
        paths = [
            p
            for p in sorted(Path(args.scenario_dir).glob("*.json"))
            if p.name != "manifest.json"
        ]
        if not paths:
            raise SystemExit2(f"no scenario files in {args.scenario_dir}")
        return [load_scenario_file(p) for p in paths]
    if args.gen is None:
        raise SystemExit2("a scenario source is required: --scenario-dir or --gen")
    sampler = {
        "car-following": sample_car_following_scene,
        "crossing": sample_crossing_scene,
        "chain": sample_chain_scene,
    }[args.gen]
    scenes = []
    for i in range(args.count):
        rng = np.random.default_rng([args.seed, i])
        scenes.append(sampler(rng, seed=i))
    return scenes


def _episode_job(payload) -> dict:
    (index, scenario_text, policy_mode, ego_mode, planner_doc, seed) = payload
    scenario = load_scenario(scenario_text)
    planner = build_planner(PlannerSpec(**planner_doc))
    policy = ResolutionPolicy(policy_mode, ego_mode)
    result = run_episode(scenario, planner, policy, seed=seed)
    doc = compute_metrics(result, scenario).to_doc()
    doc["_index"] = index
    return doc


def cmd_batch(args) -> int:
    if args.workers < 1:
        raise SystemExit2("--workers must be >= 1")
    scenarios = _batch_scenarios(args)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    for p in policies:
        if p not in ("m0", "m1", "full"):
            raise SystemExit2(f"unknown policy {p!r}")

    jobs = []
    index = 0
    for policy_mode in policies:
        for i, scenario in enumerate(scenarios):
            episode_seed = args.seed * 100003 + i
            planner_doc = {
                "kind": args.planner,
                "decel": args.decel,
                "speed_scale": args.speed_scale,
                "lateral_sigma": args.lateral_sigma,
                "seed": episode_seed,
            }
            jobs.append(
                (
                    index,
                    save_scenario(scenario),
                    policy_mode,
                    args.ego_mode,
                    planner_doc,
                    episode_seed,
                )
            )
            index += 1

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_episode_job, jobs, chunksize=8))
    else:
        results = [_episode_job(job) for job in jobs]
    results.sort(key=lambda doc: doc["_index"])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    episodes_path = out / "episodes.jsonl"
    with episodes_path.open("w", encoding="utf-8") as fh:
        for doc in results:
            fh.write(json.dumps(doc, sort_keys=True) + "\n")

    rows = []
    n_per_policy = len(scenarios)
    for p_idx, policy_mode in enumerate(policies):
        docs = results[p_idx * n_per_policy : (p_idx + 1) * n_per_policy]
        ms = [
            EpisodeMetrics(**{k: v for k, v in d.items() if k != "_index"})
            for d in docs
        ]
        rows.append(aggregate(ms, label=policy_mode))

    (out / "report.csv").write_text(report_to_csv(rows), encoding="utf-8")
    (out / "report.json").write_text(report_to_json(rows), encoding="utf-8")
    print(f"wrote {out / 'report.csv'}")
    print(f"wrote {out / 'report.json'}")
    return 0


def cmd_render(args) -> int:
    trace = json.loads(Path(args.trace).read_text(encoding="utf-8"))
    paths = write_frames(trace, args.out)
    print(f"wrote {len(paths)} frames to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="yieldsim",
        description="Closed-loop traffic simulation with pass/yield conflict resolution",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one episode")
    run_p.add_argument("--scenario", type=str, default=None)
    _add_gen_args(run_p)
    _add_planner_args(run_p)
    _add_policy_args(run_p)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument(
        "--force-relation", type=_override_spec, action="append", default=None,
        metavar="A>B", help="force A to be the influencer over B",
    )
    run_p.add_argument("--out", type=str, default=_default_out())
    run_p.set_defaults(func=cmd_run)

    batch_p = sub.add_parser("batch", help="run a scenario suite and aggregate")
    batch_p.add_argument("--scenario-dir", type=str, default=None)
    _add_gen_args(batch_p)
    batch_p.add_argument("--count", type=int, default=20)
    _add_planner_args(batch_p)
    batch_p.add_argument("--policies", type=str, default="m0,m1,full")
    batch_p.add_argument(
        "--ego-mode", choices=("authoritative", "cooperative"), default="cooperative"
    )
    batch_p.add_argument("--seed", type=int, default=0)
    batch_p.add_argument("--workers", type=int, default=1)
    batch_p.add_argument("--out", type=str, default=_default_out())
    batch_p.set_defaults(func=cmd_batch)

    render_p = sub.add_parser("render", help="render a trace to SVG frames")
    render_p.add_argument("--trace", type=str, required=True)
    render_p.add_argument("--out", type=str, default=_default_out())
    render_p.set_defaults(func=cmd_render)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures exit 1 with a diagnostic
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
