"""Benchmark harness: problem families, seeded timed trials, and aggregation.

Three generated families, all axis-symmetric hypercube worlds:

* dual_enclosure: start and goal each boxed in by walls whose single opening
  faces away from the other, forcing paths out and around both shells.
* homotopy_grid: a lattice of small blocks with alternating column offsets;
  start and goal sit five obstacle columns apart, giving many distinct ways
  through.
* random_world: ~75 random boxes covering at most a third of the space,
  deterministic in a world seed.

Trials record (elapsed, cost, waypoint count) at every solution improvement
via the planner callback; aggregation step-interpolates each trial onto a
fixed time grid, then reports per-time median cost (unsolved = +infinity), a
nonparametric 99% confidence interval on the median from binomial order
statistics, and the fraction of trials solved.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import make_planner, PLANNERS
from .geometry import AxisBox, ProblemDef, is_state_valid, segments_blocked
from .sampling import make_rng

INF = float("inf")

FAMILIES = ("dual_enclosure", "homotopy_grid", "random_world")


@dataclass
class Scenario:
    name: str
    family: str  # one of FAMILIES or "custom"
    problem: ProblemDef
    world_seed: int | None = None
    params: dict = field(default_factory=dict)


def _axis_point(n: int, x0: float) -> np.ndarray:
    p = np.zeros(n)
    p[0] = x0
    return p


def _enclosure_boxes(n: int, center_x: float, opening_sign: int) -> list[AxisBox]:
    """Hollow box shell: outer half-width 0.4, walls 0.1 thick, one 0.6-wide
    opening on the first axis in the direction of opening_sign."""
    c = _axis_point(n, center_x)
    lo, hi = c - 0.4, c + 0.4
    boxes = []
    w_lo, w_hi = lo.copy(), hi.copy()
    if opening_sign < 0:
        w_lo[0] = center_x + 0.3  # solid wall opposite the opening
    else:
        w_hi[0] = center_x - 0.3
    boxes.append(AxisBox(w_lo, w_hi))
    for j in range(1, n):
        for side in (-1, 1):
            b_lo, b_hi = lo.copy(), hi.copy()
            if side < 0:
                b_hi[j] = c[j] - 0.3
            else:
                b_lo[j] = c[j] + 0.3
            boxes.append(AxisBox(b_lo, b_hi))
    return boxes


def gen_dual_enclosure(dimension: int) -> Scenario:
    """Width-2.8 world; both endpoints enclosed, openings facing apart."""
    if dimension < 2:
        raise ValueError("dual_enclosure needs dimension >= 2")
    n = dimension
    half = 2.8 / 2.0
    bounds = AxisBox(np.full(n, -half), np.full(n, half))
    obstacles = _enclosure_boxes(n, -0.5, -1) + _enclosure_boxes(n, +0.5, +1)
    problem = ProblemDef(bounds=bounds, start=_axis_point(n, -0.5),
                         goals=[_axis_point(n, +0.5)], obstacles=obstacles)
    return Scenario(name=f"dual_enclosure_r{n}", family="dual_enclosure", problem=problem,
                    params={"wall_thickness": 0.1, "opening_width": 0.6, "world_width": 2.8})


def gen_homotopy_grid(dimension: int, gap_ratio: float = 1.0) -> Scenario:
    """Width-4 world tiled with 0.1-wide blocks; gap width = gap_ratio * 0.1.

    Columns sit at multiples of the pitch on the first axis, block rows at the
    same pitch on the second, with every other column shifted half a period;
    blocks span the full extent of the remaining axes. With the default ratio
    the start (-0.5, 0, ...) and goal (0.5, 0, ...) are 5 columns apart and
    the straight segment between them hits the zero-offset columns.
    """
    if dimension < 2:
        raise ValueError("homotopy_grid needs dimension >= 2")
    if gap_ratio <= 0:
        raise ValueError("gap_ratio must be positive")
    n = dimension
    half = 4.0 / 2.0
    bounds = AxisBox(np.full(n, -half), np.full(n, half))
    block = 0.1
    pitch = block * (1.0 + gap_ratio)
    k_max = int(np.floor((half - block / 2.0) / pitch))
    obstacles = []
    for k in range(-k_max, k_max + 1):
        cx = k * pitch
        y_shift = (pitch / 2.0) if (k % 2) else 0.0
        j_lo = int(np.ceil((-half + block / 2.0 - y_shift) / pitch))
        j_hi = int(np.floor((half - block / 2.0 - y_shift) / pitch))
        for j in range(j_lo, j_hi + 1):
            cy = j * pitch + y_shift
            lo = np.full(n, -half)
            hi = np.full(n, half)
            lo[0], hi[0] = cx - block / 2.0, cx + block / 2.0
            lo[1], hi[1] = cy - block / 2.0, cy + block / 2.0
            obstacles.append(AxisBox(lo, hi))
    problem = ProblemDef(bounds=bounds, start=_axis_point(n, -0.5),
                         goals=[_axis_point(n, +0.5)], obstacles=obstacles)
    return Scenario(name=f"homotopy_grid_r{n}", family="homotopy_grid", problem=problem,
                    params={"block": block, "gap_ratio": gap_ratio, "world_width": 4.0})


def gen_random_world(dimension: int, world_seed: int, n_boxes: int = 75) -> Scenario:
    """Width-2 world with up to n_boxes random boxes, stopping early once the
    summed box measure would exceed a third of the space; never covers the
    endpoints. Deterministic in world_seed."""
    if dimension < 2:
        raise ValueError("random_world needs dimension >= 2")
    n = dimension
    half = 1.0
    bounds = AxisBox(np.full(n, -half), np.full(n, half))
    start = _axis_point(n, -0.5)
    goal = _axis_point(n, +0.5)
    rng = make_rng(world_seed)
    budget = bounds.measure() / 3.0
    total = 0.0
    obstacles: list[AxisBox] = []
    while len(obstacles) < n_boxes and total < budget:
        center = rng.uniform(-half, half, size=n)
        sides = rng.uniform(0.05, 0.25, size=n) * (2 * half)
        box = AxisBox(center - sides / 2.0, center + sides / 2.0)
        if box.contains_open(start) or box.contains_open(goal):
            continue
        obstacles.append(box)
        total += box.measure()
    problem = ProblemDef(bounds=bounds, start=start, goals=[goal], obstacles=obstacles)
    return Scenario(name=f"random_world_r{n}_s{world_seed}", family="random_world",
                    problem=problem, world_seed=world_seed,
                    params={"n_boxes": n_boxes, "world_width": 2.0})


def generate_scenario(family: str, dimension: int, world_seed: int | None = None,
                      gap_ratio: float = 1.0) -> Scenario:
    if family == "dual_enclosure":
        return gen_dual_enclosure(dimension)
    if family == "homotopy_grid":
        return gen_homotopy_grid(dimension, gap_ratio=gap_ratio)
    if family == "random_world":
        return gen_random_world(dimension, world_seed if world_seed is not None else 0)
    raise ValueError(f"unknown family {family!r}; choose from {list(FAMILIES)}")


def straight_line_blocked(problem: ProblemDef) -> bool:
    for g in problem.goals:
        blocked = segments_blocked(problem, problem.start[None, :], np.asarray(g)[None, :])
        if not blocked[0]:
            return False
    return True


# ------------------------------------------------------------------- trials


@dataclass
class TrialRecord:
    planner: str
    seed: int
    budget_s: float
    events: list  # (elapsed_s, cost, waypoint_count) per improvement
    solved: bool
    final_cost: float
    path: np.ndarray | None
    counters: dict
    solve_time_s: float | None  # elapsed at first solution


def run_trial(problem: ProblemDef, planner_name: str, seed: int, budget_s: float, *,
              stop_on_first_solution: bool = False, planner_options: dict | None = None) -> TrialRecord:
    """One seeded, wall-clock-budgeted run; events recorded on improvement."""
    if planner_name not in PLANNERS:
        raise ValueError(f"unknown planner {planner_name!r}; choose from {sorted(PLANNERS)}")
    if budget_s <= 0.0:
        return TrialRecord(planner=planner_name, seed=seed, budget_s=budget_s, events=[],
                           solved=False, final_cost=INF, path=None, counters={}, solve_time_s=None)
    planner = make_planner(planner_name, problem, seed=seed, **(planner_options or {}))
    events: list[tuple[float, float, int]] = []

    def on_improvement(elapsed: float, cost: float, path):
        events.append((float(elapsed), float(cost), 0 if path is None else len(path)))

    result = planner.solve(budget_s, stop_on_first_solution=stop_on_first_solution,
                           callback=on_improvement)
    solved = len(events) > 0
    return TrialRecord(
        planner=planner_name, seed=seed, budget_s=budget_s, events=events, solved=solved,
        final_cost=float(result.cost) if solved else INF,
        path=result.path if solved else None,
        counters=result.counters,
        solve_time_s=events[0][0] if solved else None,
    )


# --------------------------------------------------------------- aggregation


@dataclass
class AggregateSeries:
    times: np.ndarray
    median_cost: np.ndarray  # +inf where fewer than half the trials have solved
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    success_fraction: np.ndarray
    n_trials: int

    def plottable(self) -> np.ndarray:
        """Mask of grid points whose median is finite (infinite ones are not
        meant to be drawn)."""
        return np.isfinite(self.median_cost)


def median_ci_indices(n_trials: int, confidence: float = 0.99) -> tuple[int, int]:
    """1-based order-statistic indices (k, j) bounding the median.

    k is the largest integer with P(Binomial(n, 1/2) < k) <= (1-confidence)/2
    and j the smallest with P(Binomial(n, 1/2) >= j) <= (1-confidence)/2;
    k == 0 or j == n+1 mean the tail bound is unattainable at this n.
    """
    from scipy.stats import binom

    alpha = (1.0 - confidence) / 2.0
    ks = np.arange(n_trials + 2)
    below = binom.cdf(ks - 1, n_trials, 0.5)  # P(X < k)
    at_least = binom.sf(ks - 1, n_trials, 0.5)  # P(X >= j)
    k = int(ks[below <= alpha].max())
    j = int(ks[1:][at_least[1:] <= alpha].min()) if np.any(at_least[1:] <= alpha) else n_trials + 1
    return k, j


def interpolate_costs(trials: list[TrialRecord], times: np.ndarray) -> np.ndarray:
    """Step interpolation: row per trial, cost = last improvement at or before t."""
    out = np.full((len(trials), len(times)), INF)
    for row, tr in enumerate(trials):
        if not tr.events:
            continue
        ev_t = np.array([e[0] for e in tr.events])
        ev_c = np.array([e[1] for e in tr.events])
        idx = np.searchsorted(ev_t, times, side="right") - 1
        valid = idx >= 0
        out[row, valid] = ev_c[idx[valid]]
    return out


def aggregate(trials: list[TrialRecord], period_s: float = 1e-4,
              budget_s: float | None = None) -> AggregateSeries:
    """Median cost vs time with a 99% order-statistic CI and success fraction."""
    if not trials:
        raise ValueError("aggregate needs at least one trial")
    if period_s <= 0:
        raise ValueError("period_s must be positive")
    if budget_s is None:
        budget_s = trials[0].budget_s
    n_pts = int(np.floor(budget_s / period_s + 1e-9)) + 1
    times = np.arange(n_pts) * period_s
    costs = interpolate_costs(trials, times)
    n = len(trials)
    order = np.sort(costs, axis=0)
    median = np.median(costs, axis=0)
    k, j = median_ci_indices(n)
    ci_lo = order[k - 1] if k >= 1 else np.full(n_pts, -INF)
    ci_hi = order[j - 1] if j <= n else np.full(n_pts, INF)
    success = np.isfinite(costs).mean(axis=0)
    return AggregateSeries(times=times, median_cost=median, ci_lo=ci_lo.copy(),
                           ci_hi=ci_hi.copy(), success_fraction=success, n_trials=n)


def write_aggregate_csv(path, series: AggregateSeries):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "median_cost", "ci_lo", "ci_hi", "success_fraction"])
        for i in range(len(series.times)):
            w.writerow([repr(float(series.times[i])), repr(float(series.median_cost[i])),
                        repr(float(series.ci_lo[i])), repr(float(series.ci_hi[i])),
                        repr(float(series.success_fraction[i]))])


def read_aggregate_csv(path) -> AggregateSeries:
    rows = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["time", "median_cost", "ci_lo", "ci_hi", "success_fraction"]:
            raise ValueError(f"unexpected aggregate header: {header}")
        for row in r:
            rows.append([float(v) for v in row])
    arr = np.array(rows)
    return AggregateSeries(times=arr[:, 0], median_cost=arr[:, 1], ci_lo=arr[:, 2],
                           ci_hi=arr[:, 3], success_fraction=arr[:, 4], n_trials=0)


# ------------------------------------------------------------------- suites


def _trial_task(args):
    problem, name, seed, budget_s, stop_first, options = args
    return run_trial(problem, name, seed, budget_s,
                     stop_on_first_solution=stop_first, planner_options=options)


def run_bench(scenario: Scenario, planner_names: list[str], trials: int, budget_s: float,
              seed_base: int = 0, *, period_s: float = 1e-4, stop_on_first_solution: bool = False,
              planner_options: dict | None = None, jobs: int = 1,
              progress=None) -> dict[str, tuple[list[TrialRecord], AggregateSeries]]:
    """trials x planners seeded runs; per-planner records plus aggregate."""
    for name in planner_names:
        if name not in PLANNERS:
            raise ValueError(f"unknown planner {name!r}; choose from {sorted(PLANNERS)}")
    out: dict[str, tuple[list[TrialRecord], AggregateSeries]] = {}
    tasks = [(scenario.problem, name, seed_base + i, budget_s, stop_on_first_solution,
              planner_options or {})
             for name in planner_names for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_trial_task, tasks))
    else:
        records = []
        for task in tasks:
            records.append(_trial_task(task))
            if progress is not None:
                progress(task[1], task[2])
    for pi, name in enumerate(planner_names):
        recs = records[pi * trials: (pi + 1) * trials]
        out[name] = (recs, aggregate(recs, period_s=period_s, budget_s=budget_s))
    return out
