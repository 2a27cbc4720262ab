"""YAML documents for problems, scenarios, trials, and plan results.

One format for everything human-readable; field names are a stable contract:

problem / scenario (a scenario is a problem plus name/family/world_seed):
    dimension, bounds {lower, upper}, obstacles [{lower, upper}], start, goals

trial:
    planner, seed, budget_s, solved, final_cost, solve_time_s,
    events [[elapsed_s, cost, waypoint_count]], path, counters

plan result:
    planner, seed, solved, cost, waypoints, events, counters

Loaders raise FileFormatError naming the offending field.
"""
from __future__ import annotations

import numpy as np
import yaml

from .bench import Scenario, TrialRecord
from .geometry import AxisBox, ProblemDef

INF = float("inf")


class FileFormatError(ValueError):
    """Structural problem in a document; the message names the field."""


def _need(doc: dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise FileFormatError(f"missing field '{where}{key}'")
    return doc[key]


def _vector(value, length: int | None, where: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, (int, float)) for v in value):
        raise FileFormatError(f"field '{where}' must be a list of numbers")
    arr = np.asarray(value, dtype=float)
    if length is not None and arr.shape[0] != length:
        raise FileFormatError(f"field '{where}' must have length {length}, got {arr.shape[0]}")
    return arr


def _box(value, n: int, where: str) -> AxisBox:
    lo = _vector(_need(value, "lower", where + "."), n, where + ".lower")
    hi = _vector(_need(value, "upper", where + "."), n, where + ".upper")
    if np.any(hi < lo):
        raise FileFormatError(f"field '{where}': upper must be >= lower on every axis")
    return AxisBox(lo, hi)


def problem_from_dict(doc: dict) -> ProblemDef:
    n = _need(doc, "dimension", "")
    if not isinstance(n, int) or n < 1:
        raise FileFormatError("field 'dimension' must be a positive integer")
    bounds = _box(_need(doc, "bounds", ""), n, "bounds")
    start = _vector(_need(doc, "start", ""), n, "start")
    goals_raw = _need(doc, "goals", "")
    if not isinstance(goals_raw, list) or not goals_raw:
        raise FileFormatError("field 'goals' must be a nonempty list of states")
    goals = [_vector(g, n, f"goals[{i}]") for i, g in enumerate(goals_raw)]
    obstacles_raw = doc.get("obstacles", [])
    if not isinstance(obstacles_raw, list):
        raise FileFormatError("field 'obstacles' must be a list")
    obstacles = [_box(b, n, f"obstacles[{i}]") for i, b in enumerate(obstacles_raw)]
    return ProblemDef(bounds=bounds, start=start, goals=goals, obstacles=obstacles)


def problem_to_dict(problem: ProblemDef) -> dict:
    return {
        "dimension": problem.dimension,
        "bounds": {"lower": problem.bounds.lower.tolist(), "upper": problem.bounds.upper.tolist()},
        "obstacles": [{"lower": b.lower.tolist(), "upper": b.upper.tolist()}
                      for b in problem.obstacles],
        "start": problem.start.tolist(),
        "goals": [g.tolist() for g in problem.goals],
    }


def scenario_to_dict(scenario: Scenario) -> dict:
    doc = {"name": scenario.name, "family": scenario.family,
           "world_seed": scenario.world_seed, "params": dict(scenario.params)}
    doc.update(problem_to_dict(scenario.problem))
    return doc


def scenario_from_dict(doc: dict) -> Scenario:
    problem = problem_from_dict(doc)
    return Scenario(
        name=str(doc.get("name", "custom")),
        family=str(doc.get("family", "custom")),
        problem=problem,
        world_seed=doc.get("world_seed"),
        params=doc.get("params") or {},
    )


def trial_to_dict(trial: TrialRecord) -> dict:
    return {
        "planner": trial.planner,
        "seed": trial.seed,
        "budget_s": trial.budget_s,
        "solved": bool(trial.solved),
        "final_cost": float(trial.final_cost),
        "solve_time_s": trial.solve_time_s,
        "events": [[float(t), float(c), int(w)] for t, c, w in trial.events],
        "path": None if trial.path is None else np.asarray(trial.path).tolist(),
        "counters": {k: int(v) if isinstance(v, (int, np.integer)) else float(v)
                     for k, v in trial.counters.items()},
    }


def trial_from_dict(doc: dict) -> TrialRecord:
    events = [(float(t), float(c), int(w)) for t, c, w in _need(doc, "events", "")]
    path = doc.get("path")
    return TrialRecord(
        planner=str(_need(doc, "planner", "")),
        seed=int(_need(doc, "seed", "")),
        budget_s=float(doc.get("budget_s", 0.0)),
        events=events,
        solved=bool(_need(doc, "solved", "")),
        final_cost=float(doc.get("final_cost", INF)),
        path=None if path is None else np.asarray(path, dtype=float),
        counters=doc.get("counters") or {},
        solve_time_s=doc.get("solve_time_s"),
    )


def save_yaml(path, doc: dict):
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, default_flow_style=None)


def load_yaml(path) -> dict:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise FileFormatError("document root must be a key/value mapping")
    return doc


def load_problem(path) -> ProblemDef:
    return problem_from_dict(load_yaml(path))


def load_scenario(path) -> Scenario:
    return scenario_from_dict(load_yaml(path))


def save_scenario(path, scenario: Scenario):
    save_yaml(path, scenario_to_dict(scenario))


def save_trial(path, trial: TrialRecord):
    save_yaml(path, trial_to_dict(trial))


def load_trial(path) -> TrialRecord:
    return trial_from_dict(load_yaml(path))
