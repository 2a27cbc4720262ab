"""Incremental sampling planners used as comparison points.

All of them grow trees one steered extension at a time:

* rrt: single tree, goal-biased, stops at the first solution.
* rrt_connect: two trees grown toward each other, stops at the first join.
* rrtstar: anytime; picks the best collision-free parent among the RGG
  neighborhood (candidates tried in ascending potential cost, so only the
  winning edge and its failed predecessors are checked) and rewires the
  neighborhood through the new vertex.
* informed_rrtstar: rrtstar that draws directly from the informed set once a
  solution exists and prunes leaves that cannot better it.
* sorrtstar: informed batches processed in ascending f_hat order, which makes
  each batch behave like an ordered wavefront instead of random probing.

Steered extensions use the exact chord: steer(a, b) returns b when
||b - a|| <= r_steer, otherwise the point exactly r_steer along the segment.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import geometry
from .geometry import ProblemDef
from .bitstar import BitStar, BitstarConfig, PlanResult
from .rgg import RggParams, SpatialIndex, radius_bound
from .sampling import InformedSampler, make_rng, sample_uniform_box

INF = float("inf")


def default_steer_radius(dimension: int) -> float:
    # 0.3 / 0.5 / 0.9 / 1.7 for n = 2 / 4 / 8 / 16
    return 0.1 * (1 + dimension)


@dataclass
class BaselineConfig:
    goal_bias: float = 0.05
    r_steer: float | None = None  # default grows with dimension, see above
    eta: float = 2.0
    batch_size: int = 100  # sorrtstar only
    prune_threshold_fraction: float = 0.05

    def resolved_steer(self, dimension: int) -> float:
        return self.r_steer if self.r_steer is not None else default_steer_radius(dimension)


def steer(x_from: np.ndarray, x_to: np.ndarray, r_steer: float) -> np.ndarray:
    d = float(np.linalg.norm(x_to - x_from))
    if d <= r_steer:
        return x_to.copy()
    return x_from + (r_steer / d) * (x_to - x_from)


class _Tree:
    """Growable tree over a spatial index; costs cached per vertex."""

    def __init__(self, dimension: int):
        self.n = dimension
        cap = 256
        self.coords = np.empty((cap, dimension))
        self.g = np.empty(cap)
        self.parent = np.empty(cap, dtype=np.int64)
        self.edge_cost = np.empty(cap)
        self.children: list[list[int]] = []
        self.size = 0
        self.alive = np.zeros(cap, dtype=bool)
        self.n_alive = 0
        self.index = SpatialIndex(dimension)

    def _grow(self, need: int):
        cap = self.coords.shape[0]
        if need <= cap:
            return
        new_cap = max(need, cap * 2)
        for name in ("coords", "g", "parent", "edge_cost", "alive"):
            old = getattr(self, name)
            shape = (new_cap,) + old.shape[1:]
            new = np.zeros(shape, dtype=old.dtype) if old.dtype == bool else np.empty(shape, dtype=old.dtype)
            new[: self.size] = old[: self.size]
            setattr(self, name, new)

    def add(self, x: np.ndarray, parent: int, cost: float) -> int:
        vid = self.size
        self._grow(vid + 1)
        self.coords[vid] = x
        self.parent[vid] = parent
        self.edge_cost[vid] = cost
        self.g[vid] = (self.g[parent] + cost) if parent >= 0 else 0.0
        self.children.append([])
        self.alive[vid] = True
        self.n_alive += 1
        if parent >= 0:
            self.children[parent].append(vid)
        self.index.insert(vid, x)
        self.size += 1
        return vid

    def remove_leaf(self, vid: int):
        assert not self.children[vid]
        p = self.parent[vid]
        if p >= 0:
            self.children[p].remove(vid)
        self.alive[vid] = False
        self.n_alive -= 1
        self.index.remove(vid)

    def nearest(self, x: np.ndarray) -> int:
        hits = self.index.knn(x, 1)
        return hits[0]

    def near(self, x: np.ndarray, r: float) -> list[int]:
        return self.index.radius(x, r)

    def reparent(self, child: int, new_parent: int, cost: float) -> list[int]:
        old = self.parent[child]
        if old >= 0:
            self.children[old].remove(child)
        self.parent[child] = new_parent
        self.edge_cost[child] = cost
        self.children[new_parent].append(child)
        updated = []
        stack = [child]
        while stack:
            u = stack.pop()
            self.g[u] = self.g[self.parent[u]] + self.edge_cost[u]
            updated.append(u)
            stack.extend(self.children[u])
        return updated

    def path_to(self, vid: int) -> np.ndarray:
        chain = [vid]
        while self.parent[chain[-1]] >= 0:
            chain.append(int(self.parent[chain[-1]]))
        return self.coords[np.array(chain[::-1], dtype=int)].copy()


class _BaselinePlanner:
    """Shared solve loop: one tree extension per iteration, wall-clock budget."""

    name = "baseline"
    anytime = False

    def __init__(self, problem: ProblemDef, config: BaselineConfig | None = None, seed: int = 0):
        self.problem = problem
        self.cfg = config or BaselineConfig()
        self.rng = make_rng(seed)
        self.seed = seed
        self.r_steer = self.cfg.resolved_steer(problem.dimension)
        self.tree = _Tree(problem.dimension)
        self.tree.add(problem.start, parent=-1, cost=0.0)
        self.goal_states = [np.asarray(g, dtype=float) for g in problem.goals]
        self.goal_vertices: dict[int, int] = {}  # goal index -> vertex id
        self.c_best = INF
        self.counters = {
            "iterations": 0, "samples_drawn": 0, "collision_checks": 0,
            "vertices_added": 0, "rewirings": 0, "goal_bias_draws": 0,
            "prunes_run": 0, "vertices_pruned": 0, "batch_redraws": 0,
        }
        for gi, gs in enumerate(self.goal_states):
            if np.array_equal(gs, problem.start):
                self.goal_vertices[gi] = 0
                self.c_best = 0.0
        self._lower_bound = min(
            (float(np.linalg.norm(gs - self.problem.start)) for gs in self.goal_states),
            default=INF)

    def _collision_free(self, a: np.ndarray, b: np.ndarray) -> float:
        c = geometry.c_true(self.problem, a, b)
        self.counters["collision_checks"] += 1
        return c

    def _register_goal_hit(self, vid: int):
        x = self.tree.coords[vid]
        for gi, gs in enumerate(self.goal_states):
            if np.array_equal(x, gs):
                self.goal_vertices[gi] = vid

    def _current_best(self) -> tuple[float, int | None]:
        best, best_vid = INF, None
        for vid in self.goal_vertices.values():
            if self.tree.alive[vid] and self.tree.g[vid] < best:
                best, best_vid = float(self.tree.g[vid]), vid
        return best, best_vid

    def iterate(self) -> bool:
        """One extension attempt; True if the tree changed."""
        raise NotImplementedError

    def best_path(self) -> np.ndarray | None:
        _, vid = self._current_best()
        return self.tree.path_to(vid) if vid is not None else None

    def solve(self, budget_s: float | None = None, *, target_cost: float | None = None,
              max_iterations: int | None = None, stop_on_first_solution: bool = False,
              callback=None) -> PlanResult:
        if budget_s is None and target_cost is None and max_iterations is None:
            raise ValueError("solve needs at least one stop condition")
        t0 = time.perf_counter()
        status = "running"
        if np.isfinite(self.c_best) and callback is not None:
            callback(0.0, self.c_best, self.best_path())
        stop_first = stop_on_first_solution or not self.anytime
        # once the incumbent reaches the straight-line lower bound, informed
        # sets collapse to measure zero and nothing can improve: stop cleanly
        done = self.c_best <= self._lower_bound * (1.0 + 1e-12)
        if done:
            status = "converged"
        while not done:
            if budget_s is not None and time.perf_counter() - t0 >= budget_s:
                status = "budget"
                break
            if max_iterations is not None and self.counters["iterations"] >= max_iterations:
                status = "iterations"
                break
            self.counters["iterations"] += 1
            self.iterate()
            cost, _ = self._current_best()
            if cost < self.c_best:
                self.c_best = cost
                self._on_improvement()
                if callback is not None:
                    callback(time.perf_counter() - t0, cost, self.best_path())
                if stop_first:
                    status = "first_solution"
                    break
                if target_cost is not None and cost <= target_cost:
                    status = "target"
                    break
                if cost <= self._lower_bound * (1.0 + 1e-12):
                    status = "converged"
                    break
        cost, _ = self._current_best()
        self.c_best = min(self.c_best, cost)
        return PlanResult(
            solved=bool(np.isfinite(self.c_best)),
            cost=float(self.c_best),
            path=self.best_path(),
            counters=dict(self.counters),
            status=status,
            planner=self.name,
            seed=self.seed,
        )

    def _on_improvement(self):
        pass

    def _draw_target(self) -> np.ndarray:
        if self.goal_states and self.rng.random() < self.cfg.goal_bias:
            self.counters["goal_bias_draws"] += 1
            gi = int(self.rng.integers(len(self.goal_states)))
            return self.goal_states[gi].copy()
        self.counters["samples_drawn"] += 1
        return sample_uniform_box(self.rng, self.problem.bounds)


class RRT(_BaselinePlanner):
    """Goal-biased rapidly-exploring random tree; first solution only."""

    name = "rrt"
    anytime = False

    def iterate(self) -> bool:
        x_rand = self._draw_target()
        vn = self.tree.nearest(x_rand)
        x_new = steer(self.tree.coords[vn], x_rand, self.r_steer)
        if np.array_equal(x_new, self.tree.coords[vn]):
            return False  # duplicate of an existing vertex
        c = self._collision_free(self.tree.coords[vn], x_new)
        if not np.isfinite(c):
            return False
        vid = self.tree.add(x_new, vn, c)
        self.counters["vertices_added"] += 1
        self._register_goal_hit(vid)
        return True


class RRTConnect(_BaselinePlanner):
    """Bidirectional trees joined by a greedy connect walk; no goal bias."""

    name = "rrt_connect"
    anytime = False

    def __init__(self, problem: ProblemDef, config: BaselineConfig | None = None, seed: int = 0):
        super().__init__(problem, config, seed)
        self.goal_tree = _Tree(problem.dimension)
        self._goal_tree_roots: list[int] = []
        for gs in self.goal_states:
            if not np.array_equal(gs, problem.start):
                self._goal_tree_roots.append(self.goal_tree.add(gs, parent=-1, cost=0.0))
        self._a_is_start = True
        self._join: tuple[int, int] | None = None  # (start tree vid, goal tree vid)

    def _extend(self, tree: _Tree, x_target: np.ndarray) -> tuple[int | None, bool]:
        """One steered step toward x_target; (vid or None, reached target)."""
        vn = tree.nearest(x_target)
        x_new = steer(tree.coords[vn], x_target, self.r_steer)
        if np.array_equal(x_new, tree.coords[vn]):
            # zero-length step: the target is already a tree vertex
            reached = bool(np.array_equal(x_new, x_target))
            return (vn, True) if reached else (None, False)
        c = self._collision_free(tree.coords[vn], x_new)
        if not np.isfinite(c):
            return None, False
        vid = tree.add(x_new, vn, c)
        self.counters["vertices_added"] += 1
        return vid, bool(np.array_equal(x_new, x_target))

    def iterate(self) -> bool:
        if self._join is not None or self.goal_tree.size == 0:
            return False
        self.counters["samples_drawn"] += 1
        x_rand = sample_uniform_box(self.rng, self.problem.bounds)
        tree_a = self.tree if self._a_is_start else self.goal_tree
        tree_b = self.goal_tree if self._a_is_start else self.tree
        self._a_is_start = not self._a_is_start

        vid_a, _ = self._extend(tree_a, x_rand)
        if vid_a is None:
            return False
        x_link = tree_a.coords[vid_a]
        while True:
            vid_b, reached = self._extend(tree_b, x_link)
            if vid_b is None:
                return True
            if reached:
                if tree_a is self.tree:
                    self._join = (vid_a, vid_b)
                else:
                    self._join = (vid_b, vid_a)
                return True

    def _current_best(self) -> tuple[float, int | None]:
        if self._join is None:
            return super()._current_best()
        s, g = self._join
        cost = float(self.tree.g[s] + self.goal_tree.g[g])
        return cost, s

    def best_path(self) -> np.ndarray | None:
        if self._join is None:
            return super().best_path()
        s, g = self._join
        fwd = self.tree.path_to(s)
        back = self.goal_tree.path_to(g)[::-1]
        return np.vstack([fwd, back[1:]]) if len(back) > 1 else fwd


class RRTStar(_BaselinePlanner):
    """Anytime asymptotically optimal tree: best parent + neighborhood rewiring.

    Parent candidates are sorted by optimistic cost through them and collision
    checked in that order, so the first feasible candidate is the best one.
    """

    name = "rrtstar"
    anytime = True
    informed = False

    def __init__(self, problem: ProblemDef, config: BaselineConfig | None = None, seed: int = 0):
        super().__init__(problem, config, seed)
        self.sampler = InformedSampler(problem)
        self._last_prune_c = INF

    def _rewire_radius(self) -> float:
        q = max(self.tree.n_alive, 2)
        measure = self.problem.space_measure()
        if self.informed and np.isfinite(self.c_best):
            measure = self.sampler.measure(self.c_best)
        return radius_bound(q, self.problem.dimension, measure, self.cfg.eta)

    def _draw_free_target(self) -> np.ndarray:
        if self.goal_states and self.rng.random() < self.cfg.goal_bias:
            self.counters["goal_bias_draws"] += 1
            gi = int(self.rng.integers(len(self.goal_states)))
            return self.goal_states[gi].copy()
        self.counters["samples_drawn"] += 1
        if self.informed and np.isfinite(self.c_best):
            return self.sampler.draw(self.rng, self.c_best)
        return sample_uniform_box(self.rng, self.problem.bounds)

    def _extend_at(self, x_rand: np.ndarray) -> bool:
        tree = self.tree
        vn = tree.nearest(x_rand)
        x_new = steer(tree.coords[vn], x_rand, self.r_steer)
        if not geometry.is_state_valid(self.problem, x_new):
            return False
        near = tree.near(x_new, self._rewire_radius())
        if vn not in near:
            near.append(vn)
        dists = {w: float(np.linalg.norm(tree.coords[w] - x_new)) for w in near}
        if any(d == 0.0 for d in dists.values()):
            return False  # already in the tree
        # best first: the first collision-free candidate is the best parent
        order = sorted(near, key=lambda w: (tree.g[w] + dists[w], w))
        vid = None
        for w in order:
            c = self._collision_free(tree.coords[w], x_new)
            if np.isfinite(c):
                vid = tree.add(x_new, w, c)
                self.counters["vertices_added"] += 1
                break
        if vid is None:
            return False
        self._register_goal_hit(vid)
        # rewire neighbors through the new vertex when that shortens them
        for w in sorted(near, key=lambda w: (tree.g[vid] + dists[w], w)):
            if w == tree.parent[vid]:
                continue
            if tree.g[vid] + dists[w] < tree.g[w]:
                c = self._collision_free(x_new, tree.coords[w])
                if np.isfinite(c) and tree.g[vid] + c < tree.g[w]:
                    tree.reparent(w, vid, c)
                    self.counters["rewirings"] += 1
        return True

    def iterate(self) -> bool:
        return self._extend_at(self._draw_free_target())

    def _on_improvement(self):
        if not self.informed:
            return
        if np.isfinite(self._last_prune_c):
            drop = (self._last_prune_c - self.c_best) / self._last_prune_c
            if drop <= self.cfg.prune_threshold_fraction:
                return
        self._prune_leaves()
        self._last_prune_c = self.c_best

    def _prune_leaves(self):
        """Repeatedly drop leaves whose straight-line bound exceeds the solution."""
        self.counters["prunes_run"] += 1
        tree = self.tree
        keep = set(self.goal_vertices.values()) | {0}
        fhat = geometry.f_hat_many(self.problem, tree.coords[: tree.size])
        doomed = set(np.flatnonzero(fhat >= self.c_best).tolist()) - keep
        changed = True
        while changed:
            changed = False
            for vid in list(doomed):
                if tree.alive[vid] and not tree.children[vid]:
                    tree.remove_leaf(vid)
                    doomed.discard(vid)
                    self.counters["vertices_pruned"] += 1
                    changed = True


class InformedRRTStar(RRTStar):
    """RRT* that samples the informed subset directly once a solution exists."""

    name = "informed_rrtstar"
    informed = True


class SORRTStar(InformedRRTStar):
    """Informed batches processed in ascending f_hat order.

    Draws batch_size informed samples at once, sorts them by f_hat, and feeds
    them to the RRT* extension lowest-estimate first; the goal bias is decided
    before popping, leaving the batch untouched on biased iterations.
    Improvements filter the pending batch against the new solution cost.
    """

    name = "sorrtstar"

    def __init__(self, problem: ProblemDef, config: BaselineConfig | None = None, seed: int = 0):
        super().__init__(problem, config, seed)
        self._batch: list[tuple[float, np.ndarray]] = []
        self._batch_pos = 0
        self.popped_fhat_trace: list[list[float]] = []

    def _fhat(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x - self.problem.start) + geometry.h_hat(self.problem, x))

    def _refill_batch(self):
        self.counters["batch_redraws"] += 1
        draws = []
        for _ in range(self.cfg.batch_size):
            self.counters["samples_drawn"] += 1
            if np.isfinite(self.c_best):
                x = self.sampler.draw(self.rng, self.c_best)
            else:
                x = sample_uniform_box(self.rng, self.problem.bounds)
            draws.append((self._fhat(x), x))
        draws.sort(key=lambda t: t[0])
        self._batch = draws
        self._batch_pos = 0
        self.popped_fhat_trace.append([])

    def iterate(self) -> bool:
        if self.goal_states and self.rng.random() < self.cfg.goal_bias:
            self.counters["goal_bias_draws"] += 1
            gi = int(self.rng.integers(len(self.goal_states)))
            return self._extend_at(self.goal_states[gi].copy())
        if self._batch_pos >= len(self._batch):
            self._refill_batch()
        fhat, x = self._batch[self._batch_pos]
        self._batch_pos += 1
        self.popped_fhat_trace[-1].append(fhat)
        return self._extend_at(x)

    def _on_improvement(self):
        super()._on_improvement()
        kept = [(f, x) for f, x in self._batch[self._batch_pos:] if f < self.c_best]
        self._batch = kept
        self._batch_pos = 0


PLANNERS = {
    "rrt": RRT,
    "rrt_connect": RRTConnect,
    "rrtstar": RRTStar,
    "informed_rrtstar": InformedRRTStar,
    "sorrtstar": SORRTStar,
    "bitstar": BitStar,
}


def make_planner(name: str, problem: ProblemDef, seed: int = 0, *,
                 batch_size: int = 100, delayed_rewiring: bool = True,
                 jit_sampling: bool = False, sample_removal: bool = False,
                 goal_bias: float = 0.05, r_steer: float | None = None,
                 eta: float = 2.0, rgg_mode: str = "r_disc"):
    """Build any registered planner from flat keyword options."""
    if name not in PLANNERS:
        raise ValueError(f"unknown planner {name!r}; choose from {sorted(PLANNERS)}")
    if name == "bitstar":
        cfg = BitstarConfig(
            batch_size=batch_size,
            rgg=RggParams(dimension=problem.dimension, space_measure=problem.space_measure(),
                          mode=rgg_mode, eta=eta, batch_size_m=batch_size),
            delayed_rewiring=delayed_rewiring,
            jit_sampling=jit_sampling,
            sample_removal=sample_removal,
        )
        return BitStar(problem, cfg, seed=seed)
    cfg = BaselineConfig(goal_bias=goal_bias, r_steer=r_steer, eta=eta, batch_size=batch_size)
    return PLANNERS[name](problem, cfg, seed=seed)
