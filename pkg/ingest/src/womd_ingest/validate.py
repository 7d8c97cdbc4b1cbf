"""Schema and invariant validation for converted scenario files.

Checks the published scenario JSON schema independently of the simulator
package: field names, agent kinds, horizon length, unique ids, ego
presence, finite values, and nonnegative speeds.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

AGENT_KINDS = ("vehicle", "pedestrian", "cyclist")
STATE_FIELDS = ("x", "y", "heading", "speed")


class ValidationError(ValueError):
    pass


def _check_state(state: dict, where: str) -> None:
    for field in STATE_FIELDS:
        if field not in state:
            raise ValidationError(f"{where}: state missing {field!r}")
        value = state[field]
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ValidationError(f"{where}: non-finite {field!r}")
    if state["speed"] < 0:
        raise ValidationError(f"{where}: negative speed")


def validate_scenario_doc(doc: dict) -> None:
    for key in ("id", "config", "ego_id", "agents"):
        if key not in doc:
            raise ValidationError(f"missing top-level field {key!r}")
    config = doc["config"]
    step = config.get("step_seconds")
    horizon = config.get("horizon_seconds")
    if not step or step <= 0:
        raise ValidationError("config: step_seconds must be positive")
    steps = horizon / step
    if abs(steps - round(steps)) > 1e-9:
        raise ValidationError("config: horizon not a multiple of step")
    horizon_steps = round(steps)

    ids = [a.get("id") for a in doc["agents"]]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate agent ids")
    if doc["ego_id"] not in ids:
        raise ValidationError(f"ego {doc['ego_id']!r} not among agents")
    for agent in doc["agents"]:
        where = f"agent {agent.get('id')!r}"
        if agent.get("kind") not in AGENT_KINDS:
            raise ValidationError(f"{where}: unknown kind")
        if agent.get("length", 0) <= 0 or agent.get("width", 0) <= 0:
            raise ValidationError(f"{where}: nonpositive dimensions")
        if not agent.get("observed"):
            raise ValidationError(f"{where}: empty observed history")
        future = agent.get("reference_future", [])
        if len(future) != horizon_steps:
            raise ValidationError(
                f"{where}: reference_future has {len(future)} states, "
                f"expected {horizon_steps}"
            )
        for state in agent["observed"]:
            _check_state(state, where)
        for state in future:
            _check_state(state, where)


def validate_output(directory) -> dict:
    """Validate every scenario file in a directory.

    Returns {"valid": [paths], "invalid": [{"path", "error"}]}; an empty
    directory yields an empty, successful report.
    """
    report = {"valid": [], "invalid": []}
    for path in sorted(Path(directory).glob("*.json")):
        if path.name == "manifest.json":  # conversion metadata, not a scenario
            continue
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            validate_scenario_doc(doc)
        except (json.JSONDecodeError, ValidationError, OSError) as exc:
            report["invalid"].append({"path": str(path), "error": str(exc)})
        else:
            report["valid"].append(str(path))
    return report
