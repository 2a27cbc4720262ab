"""Anytime batch search over an edge-implicit random geometric graph.

The planner keeps one spanning tree rooted at the start and grows it toward
the goals in batches. Each batch adds m states sampled from the informed set,
then searches the implied RGG in order of potential solution quality with two
priority queues: a vertex expansion queue ordered by g_T(v) + h_hat(v) and an
edge queue ordered by (g_T(v) + c_hat(v,x) + h_hat(x), g_T(v) + c_hat(v,x),
g_T(v)). Edges are only collision checked when popped, so effort concentrates
on edges that could still better the current solution. The search is identical
to repeated truncated A* searches over successively denser graphs, which keeps
it anytime, resolution-independent, and almost-surely asymptotically optimal.

Queue keys depend only on g_T of the edge source, which never increases inside
a batch; rewirings re-push affected entries with refreshed keys (exact
decrease-key via duplicates and validity stamps), so the best entry popped is
always currently best.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import geometry
from .geometry import ProblemDef
from .rgg import RggParams, SpatialIndex, k_bound, radius_bound
from .sampling import InformedSampler, make_rng

INF = float("inf")
# relative slack on the straight-line lower bound below which the informed set
# is empty and the solution cannot be improved
CONVERGED_RTOL = 1e-12


class StepOutcome(Enum):
    BATCH_STARTED = "batch_started"
    VERTEX_EXPANDED = "vertex_expanded"
    EDGE_ADDED = "edge_added"
    EDGE_DISCARDED = "edge_discarded"
    BATCH_EXHAUSTED = "batch_exhausted"
    CONVERGED = "converged"


@dataclass
class BitstarConfig:
    batch_size: int = 100
    rgg: RggParams | None = None  # derived from the problem when omitted
    delayed_rewiring: bool = True
    jit_sampling: bool = False
    jit_density: float | None = None  # samples per unit measure; default m / space measure
    sample_removal: bool = False
    prune_threshold_fraction: float = 0.05
    heuristic: str = "l2"  # "zero" disables the cost-to-go estimate
    edge_queue_purge: bool = True
    count_reuse_in_q: bool = True  # recycled states are not subtracted from q
    check_samples: bool = True  # assert informed containment of every drawn sample
    check_queue_order: bool = False  # O(Q) scan per pop; targeted tests only
    check_tree: bool = False  # full tree consistency after every edge; tests only

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (0.0 <= self.prune_threshold_fraction < 1.0):
            raise ValueError("prune_threshold_fraction must be in [0, 1)")


@dataclass
class PlanResult:
    solved: bool
    cost: float
    path: np.ndarray | None
    counters: dict
    status: str
    planner: str = "bitstar"
    seed: int | None = None


class BitStar:
    """Batch informed tree search; see module docstring.

    Drive it with solve() or, for deterministic tests, one queue operation at
    a time with step().
    """

    name = "bitstar"
    anytime = True

    def __init__(self, problem: ProblemDef, config: BitstarConfig | None = None, seed: int = 0):
        self.problem = problem
        self.cfg = config or BitstarConfig()
        self.rng = make_rng(seed)
        self.seed = seed
        n = problem.dimension
        if self.cfg.rgg is None:
            self.rgg = RggParams(dimension=n, space_measure=problem.space_measure(),
                                 batch_size_m=self.cfg.batch_size)
        else:
            self.rgg = self.cfg.rgg
            if self.rgg.dimension != n:
                raise ValueError("RGG params dimension does not match the problem")
        if self.rgg.batch_size_m != self.cfg.batch_size:
            self.rgg.batch_size_m = self.cfg.batch_size
        self.sampler = InformedSampler(problem, heuristic=self.cfg.heuristic)
        if self.cfg.jit_sampling and self.cfg.jit_density is None:
            self.cfg.jit_density = self.cfg.batch_size / problem.space_measure()

        # parallel per-state arrays, grown by doubling
        cap = 256
        self._coords = np.empty((cap, n))
        self._ghat = np.empty(cap)
        self._hhat = np.empty(cap)
        self._g = np.empty(cap)
        self._parent = np.empty(cap, dtype=np.int64)
        self._edge_cost = np.empty(cap)
        self._children: list[list[int]] = []
        self._is_vertex = np.zeros(cap, dtype=bool)
        self._is_sample = np.zeros(cap, dtype=bool)
        self._is_new = np.zeros(cap, dtype=bool)
        self._unexpanded = np.zeros(cap, dtype=bool)
        self._delayed = np.zeros(cap, dtype=bool)
        self._is_goal = np.zeros(cap, dtype=bool)
        self._valid = np.full(cap, -1, dtype=np.int8)  # -1 unknown, lazily filled
        self._n_states = 0

        self.samples_index = SpatialIndex(n)
        self.vertex_index = SpatialIndex(n)
        # compact sample table for radius queries on the default path; the
        # spatial indices stay authoritative for k-nearest and jit modes
        self._fast_samples = not self.cfg.jit_sampling and self.rgg.mode == "r_disc"
        self._stab_ids = np.empty(0, dtype=np.int64)
        self._stab_coords = np.empty((0, n))
        self._stab_alive = np.empty(0, dtype=bool)
        self._stab_row: dict[int, int] = {}
        self._stab_stale = True
        # second table restricted to this batch's new samples: old expanded
        # vertices only ever connect to those, and the new set is much smaller
        self._stab2_ids = np.empty(0, dtype=np.int64)
        self._stab2_coords = np.empty((0, n))
        self._stab2_alive = np.empty(0, dtype=bool)
        self._stab2_row: dict[int, int] = {}
        self._stab2_stale = True

        self.counters = {
            "batches_started": 0, "batches_completed": 0, "samples_drawn": 0,
            "collision_checks": 0, "edges_queued": 0, "edges_processed": 0,
            "edges_discarded": 0, "vertices_expanded": 0, "rewirings": 0,
            "prunes_run": 0, "vertices_pruned": 0, "samples_pruned": 0,
            "samples_recycled": 0, "samples_removed": 0, "queue_entries_purged": 0,
            "jit_calls": 0, "jit_samples": 0, "containment_violations": 0,
            "work_units": 0,
        }

        # queues: heaps of (key..., seq, id); validity via stored current keys
        self._qv_heap: list = []
        self._qv_key: dict[int, tuple] = {}
        self._in_qv: set[int] = set()
        self._qe_heap: list = []
        self._e_src: list[int] = []
        self._e_tgt: list[int] = []
        self._e_chat: list[float] = []
        self._e_key: list[tuple] = []
        self._e_alive: list[bool] = []
        self._e_by_src: dict[int, list[int]] = {}
        self._e_by_tgt: dict[int, list[int]] = {}
        self._e_pairs: set[tuple[int, int]] = set()
        self._qe_live = 0
        self._seq = 0

        self.goal_ids: list[int] = []
        self._goal_vertices: set[int] = set()
        self._new_ids: list[int] = []
        self._n_vertices = 0
        self._n_samples = 0

        self.c_i = INF
        self.batch_index = 0
        self.radius = INF
        self.k_near = None
        self._last_prune_ci = INF
        self._converged = False
        self._batch_open = False
        self._last_edge_improved = False
        self._c_sampled = 0.0
        self._jit_frac = 0.0
        self._uniform_since_removal = 0
        self._lower_bound = min(
            float(np.linalg.norm(np.asarray(g, dtype=float) - problem.start)) for g in problem.goals
        )

        # start vertex; goals coinciding with the start map onto its id
        self.start_id = self._add_state(problem.start)
        self._make_vertex(self.start_id, parent=-1, cost=0.0, g=0.0)
        self._unexpanded[self.start_id] = True
        for gstate in problem.goals:
            gs = np.asarray(gstate, dtype=float)
            if np.array_equal(gs, problem.start):
                gid = self.start_id
            else:
                gid = self._add_state(gs)
                self._set_sample(gid, new=True)
            self._is_goal[gid] = True
            self.goal_ids.append(gid)
            if self._is_vertex[gid]:
                self._goal_vertices.add(gid)
        self._refresh_ci()
        self._push_qv(self.start_id)

    # ---------------------------------------------------------------- states

    def _grow(self, need: int):
        cap = self._coords.shape[0]
        if need <= cap:
            return
        new_cap = max(need, cap * 2)
        for name in ("_coords", "_ghat", "_hhat", "_g", "_parent", "_edge_cost",
                     "_is_vertex", "_is_sample", "_is_new", "_unexpanded",
                     "_delayed", "_is_goal", "_valid"):
            old = getattr(self, name)
            shape = (new_cap,) + old.shape[1:]
            new = np.zeros(shape, dtype=old.dtype) if old.dtype == bool else np.empty(shape, dtype=old.dtype)
            new[: self._n_states] = old[: self._n_states]
            setattr(self, name, new)

    def _add_state(self, x: np.ndarray) -> int:
        sid = self._n_states
        self._grow(sid + 1)
        self._coords[sid] = x
        self._ghat[sid] = np.linalg.norm(x - self.problem.start)
        self._hhat[sid] = 0.0 if self.cfg.heuristic == "zero" else geometry.h_hat(self.problem, x)
        self._g[sid] = INF
        self._parent[sid] = -1
        self._edge_cost[sid] = 0.0
        self._is_vertex[sid] = False
        self._is_sample[sid] = False
        self._is_new[sid] = False
        self._unexpanded[sid] = False
        self._delayed[sid] = False
        self._is_goal[sid] = False
        self._valid[sid] = -1
        self._children.append([])
        self._n_states += 1
        return sid

    def _set_sample(self, sid: int, new: bool):
        self._is_sample[sid] = True
        self._n_samples += 1
        self.samples_index.insert(sid, self._coords[sid])
        self._stab_stale = True
        if new:
            self._is_new[sid] = True
            self._new_ids.append(sid)
            self._stab2_stale = True

    def _clear_sample(self, sid: int):
        self._is_sample[sid] = False
        self._n_samples -= 1
        self.samples_index.remove(sid)
        row = self._stab_row.get(sid)
        if row is not None:
            self._stab_alive[row] = False
        row = self._stab2_row.get(sid)
        if row is not None:
            self._stab2_alive[row] = False

    def _make_vertex(self, sid: int, parent: int, cost: float, g: float):
        self._is_vertex[sid] = True
        self._n_vertices += 1
        self._parent[sid] = parent
        self._edge_cost[sid] = cost
        self._g[sid] = g
        if parent >= 0:
            self._children[parent].append(sid)
        self.vertex_index.insert(sid, self._coords[sid])

    # ---------------------------------------------------------------- queues

    def _vertex_key(self, vid: int) -> tuple:
        gv = self._g[vid]
        return (gv + self._hhat[vid], gv)

    def _push_qv(self, vid: int):
        key = self._vertex_key(vid)
        self._qv_key[vid] = key
        self._in_qv.add(vid)
        self._seq += 1
        heapq.heappush(self._qv_heap, (key[0], key[1], self._seq, vid))

    def _repush_qv(self, vid: int):
        key = self._vertex_key(vid)
        self._qv_key[vid] = key
        self._seq += 1
        heapq.heappush(self._qv_heap, (key[0], key[1], self._seq, vid))

    def best_vertex_value(self) -> float:
        """Primary key of the best vertex entry, +inf when the queue is empty."""
        while self._qv_heap:
            k1, k2, _, vid = self._qv_heap[0]
            if vid in self._in_qv and self._qv_key[vid] == (k1, k2):
                return k1
            heapq.heappop(self._qv_heap)
        return INF

    def _pop_qv(self) -> int | None:
        while self._qv_heap:
            k1, k2, _, vid = heapq.heappop(self._qv_heap)
            if vid in self._in_qv and self._qv_key[vid] == (k1, k2):
                self._in_qv.discard(vid)
                return vid
        return None

    def _edge_key(self, eid: int) -> tuple:
        gv = self._g[self._e_src[eid]]
        est = gv + self._e_chat[eid]
        return (est + self._hhat[self._e_tgt[eid]], est, gv)

    def _push_edge(self, src: int, tgt: int, chat: float | None = None):
        pair = (src, tgt)
        if pair in self._e_pairs:
            return
        self._e_pairs.add(pair)
        eid = len(self._e_src)
        if chat is None:
            chat = float(np.linalg.norm(self._coords[src] - self._coords[tgt]))
        self._e_src.append(src)
        self._e_tgt.append(tgt)
        self._e_chat.append(chat)
        gv = self._g[src]
        est = gv + chat
        key = (est + self._hhat[tgt], est, gv)
        self._e_key.append(key)
        self._e_alive.append(True)
        self._e_by_src.setdefault(src, []).append(eid)
        self._e_by_tgt.setdefault(tgt, []).append(eid)
        self._seq += 1
        heapq.heappush(self._qe_heap, (key[0], key[1], key[2], self._seq, eid))
        self._qe_live += 1
        self.counters["edges_queued"] += 1

    def _push_edges_from(self, src: int, tgts: np.ndarray, chats: np.ndarray):
        """Bulk form of _push_edge for edges sharing one source vertex."""
        if tgts.size == 0:
            return
        gv = float(self._g[src])
        est = gv + chats
        k1s = est + self._hhat[tgts]
        es, et = self._e_src, self._e_tgt
        ec, ek, ea = self._e_chat, self._e_key, self._e_alive
        pairs = self._e_pairs
        by_src = self._e_by_src.setdefault(src, [])
        by_tgt = self._e_by_tgt
        heap = self._qe_heap
        push = heapq.heappush
        seq = self._seq
        queued = 0
        for tgt, ch, e2, e1 in zip(
            tgts.tolist(), chats.tolist(), est.tolist(), k1s.tolist()
        ):
            pair = (src, tgt)
            if pair in pairs:
                continue
            pairs.add(pair)
            eid = len(es)
            es.append(src)
            et.append(tgt)
            ec.append(ch)
            ek.append((e1, e2, gv))
            ea.append(True)
            by_src.append(eid)
            lst = by_tgt.get(tgt)
            if lst is None:
                by_tgt[tgt] = [eid]
            else:
                lst.append(eid)
            seq += 1
            push(heap, (e1, e2, gv, seq, eid))
            queued += 1
        self._seq = seq
        self._qe_live += queued
        self.counters["edges_queued"] += queued

    def _kill_edge(self, eid: int):
        if self._e_alive[eid]:
            self._e_alive[eid] = False
            self._qe_live -= 1

    def best_edge_value(self) -> float:
        """Primary key of the best edge entry, +inf when the queue is empty."""
        while self._qe_heap:
            k1, k2, k3, _, eid = self._qe_heap[0]
            if self._e_alive[eid] and self._e_key[eid] == (k1, k2, k3):
                return k1
            heapq.heappop(self._qe_heap)
        return INF

    def _pop_edge(self) -> int | None:
        while self._qe_heap:
            k1, k2, k3, _, eid = heapq.heappop(self._qe_heap)
            if self._e_alive[eid] and self._e_key[eid] == (k1, k2, k3):
                self._kill_edge(eid)
                return eid
        return None

    def _clear_queues(self):
        self._qv_heap.clear()
        self._qv_key.clear()
        self._in_qv.clear()
        self._qe_heap.clear()
        self._e_src.clear()
        self._e_tgt.clear()
        self._e_chat.clear()
        self._e_key.clear()
        self._e_alive.clear()
        self._e_by_src.clear()
        self._e_by_tgt.clear()
        self._e_pairs.clear()
        self._qe_live = 0

    def _on_g_decreased(self, vids):
        """Refresh queue entries whose keys depend on the updated vertices."""
        for vid in vids:
            if vid in self._in_qv:
                self._repush_qv(vid)
            for eid in self._e_by_src.get(vid, ()):
                if self._e_alive[eid]:
                    key = self._edge_key(eid)
                    if key != self._e_key[eid]:
                        self._e_key[eid] = key
                        self._seq += 1
                        heapq.heappush(self._qe_heap, (key[0], key[1], key[2], self._seq, eid))

    # ------------------------------------------------------------------ tree

    def _attach(self, x: int, parent: int, cost: float) -> list[int]:
        self._parent[x] = parent
        self._edge_cost[x] = cost
        self._children[parent].append(x)
        updated = []
        stack = [x]
        while stack:
            u = stack.pop()
            self._g[u] = self._g[self._parent[u]] + self._edge_cost[u]
            updated.append(u)
            stack.extend(self._children[u])
        return updated

    def _detach(self, x: int):
        p = self._parent[x]
        if p >= 0:
            self._children[p].remove(x)
        self._parent[x] = -1

    def _refresh_ci(self) -> bool:
        """Recompute the best solution cost; True if it improved."""
        new_ci = min((self._g[v] for v in self._goal_vertices), default=INF)
        if new_ci < self.c_i:
            self.c_i = new_ci
            if new_ci <= self._lower_bound * (1.0 + CONVERGED_RTOL):
                self._converged = True
            return True
        return False

    def best_path(self) -> np.ndarray | None:
        """Waypoints start..goal of the current best solution, or None."""
        if not np.isfinite(self.c_i):
            return None
        best = min(self._goal_vertices, key=lambda v: (self._g[v], v))
        chain = [best]
        while self._parent[chain[-1]] >= 0:
            chain.append(int(self._parent[chain[-1]]))
        return self._coords[np.array(chain[::-1], dtype=int)].copy()

    def tree_snapshot(self):
        """(coords, parent_row, g) arrays for the current tree, start first."""
        ids = [i for i in range(self._n_states) if self._is_vertex[i]]
        row = {sid: r for r, sid in enumerate(ids)}
        coords = self._coords[np.array(ids, dtype=int)].copy()
        parent = np.array([row[self._parent[i]] if self._parent[i] >= 0 else -1 for i in ids])
        g = self._g[np.array(ids, dtype=int)].copy()
        return coords, parent, g

    # ----------------------------------------------------------------- batch

    def _near_radius(self):
        return self.radius

    def _near_samples(self, vid: int) -> list[int]:
        if self.rgg.mode == "k_nearest" and self.k_near is not None:
            return self.samples_index.knn(self._coords[vid], self.k_near, exclude=vid)
        return self.samples_index.radius(self._coords[vid], self.radius, exclude=vid)

    def _stab_rebuild(self):
        ids = np.flatnonzero(self._is_sample[: self._n_states]).astype(np.int64)
        self._stab_ids = ids
        self._stab_coords = self._coords[ids]
        self._stab_alive = np.ones(ids.size, dtype=bool)
        self._stab_row = {int(s): r for r, s in enumerate(ids.tolist())}
        self._stab_stale = False

    def _stab2_rebuild(self):
        flags = self._is_new[: self._n_states] & self._is_sample[: self._n_states]
        ids = np.flatnonzero(flags).astype(np.int64)
        self._stab2_ids = ids
        self._stab2_coords = self._coords[ids]
        self._stab2_alive = np.ones(ids.size, dtype=bool)
        self._stab2_row = {int(s): r for r, s in enumerate(ids.tolist())}
        self._stab2_stale = False

    @staticmethod
    def _near_in_table(x, r, coords, alive, ids, self_row):
        diff = coords - x
        d = (diff * diff).sum(axis=1)
        np.sqrt(d, out=d)
        mask = d <= r
        np.logical_and(mask, alive, out=mask)
        if self_row is not None:
            mask[self_row] = False
        return ids[mask], d[mask]

    def _near_sample_chats(self, vid: int):
        """(ids, straight-line costs) of live samples within the radius.

        One vectorized pass over the compact table; the distances double as
        the c_hat values so the expansion never recomputes them.
        """
        if self._stab_stale:
            self._stab_rebuild()
        return self._near_in_table(self._coords[vid], self.radius, self._stab_coords,
                                   self._stab_alive, self._stab_ids,
                                   self._stab_row.get(vid))

    def _near_new_sample_chats(self, vid: int):
        """_near_sample_chats over this batch's new samples only."""
        if self._stab2_stale:
            self._stab2_rebuild()
        return self._near_in_table(self._coords[vid], self.radius, self._stab2_coords,
                                   self._stab2_alive, self._stab2_ids,
                                   self._stab2_row.get(vid))

    def _state_valid(self, sid: int) -> bool:
        v = self._valid[sid]
        if v < 0:
            v = 1 if geometry.is_state_valid(self.problem, self._coords[sid]) else 0
            self._valid[sid] = v
        return bool(v)

    def _eval_edge(self, v: int, x: int) -> float:
        """Exact edge cost between two stored states.

        Same contract as the standalone exact-cost function; endpoint validity
        is cached per state because coordinates never change once added.
        """
        if not (self._state_valid(v) and self._state_valid(x)):
            return INF
        a, b = self._coords[v], self._coords[x]
        if geometry.segment_blocked_one(self.problem, a, b):
            return INF
        return float(np.linalg.norm(a - b))

    def _near_vertices(self, vid: int) -> list[int]:
        if self.rgg.mode == "k_nearest" and self.k_near is not None:
            return self.vertex_index.knn(self._coords[vid], self.k_near, exclude=vid)
        return self.vertex_index.radius(self._coords[vid], self.radius, exclude=vid)

    def _draw_sample(self) -> np.ndarray:
        x = self.sampler.draw(self.rng, self.c_i)
        self.counters["samples_drawn"] += 1
        if self.cfg.check_samples and np.isfinite(self.c_i):
            fx = self._fhat_of(x)
            if fx >= self.c_i:
                self.counters["containment_violations"] += 1
        return x

    def _fhat_of(self, x) -> float:
        if self.cfg.heuristic == "zero":
            return float(np.linalg.norm(x - self.problem.start))
        return geometry.f_hat(self.problem, x)

    def start_new_batch(self):
        """Prune to the informed set, draw the batch, refill the vertex queue."""
        self.batch_index += 1
        self.counters["batches_started"] += 1
        m = self.cfg.batch_size

        if self.cfg.sample_removal:
            self.drop_unconnected_samples()

        reuse: list[int] = []
        if np.isfinite(self.c_i):
            if not np.isfinite(self._last_prune_ci):
                worth_pruning = True  # first solution: relative improvement is total
            else:
                drop = (self._last_prune_ci - self.c_i) / self._last_prune_ci
                worth_pruning = drop > self.cfg.prune_threshold_fraction
            if worth_pruning:
                reuse = self.prune()
                self._last_prune_ci = self.c_i

        # clear last batch's X_new before building this one
        for sid in self._new_ids:
            self._is_new[sid] = False
        self._new_ids = []
        self._stab2_stale = True

        for sid in reuse:
            self._set_sample(sid, new=True)

        if self.cfg.jit_sampling:
            self._c_sampled = 0.0
        elif not self._converged:
            for _ in range(m):
                x = self._draw_sample()
                sid = self._add_state(x)
                self._set_sample(sid, new=True)
            self._uniform_since_removal += m

        # connection rule for this batch
        if self.cfg.jit_sampling:
            q = self._n_vertices + self._n_samples
        elif self.cfg.sample_removal:
            q = self._n_vertices + self._uniform_since_removal - m
        else:
            q = self._n_vertices + self._n_samples - m
            if not self.cfg.count_reuse_in_q:
                q -= len(reuse)
        if self.rgg.threshold_initial_radius and self.batch_index == 1:
            q += m
        q = max(q, 2)
        self._q_last = q
        if self.rgg.mode == "k_nearest":
            self.k_near = k_bound(q, self.rgg.dimension, self.rgg.eta)
            self.radius = INF
        else:
            measure = self.sampler.measure(self.c_i)
            self.radius = radius_bound(q, self.rgg.dimension, measure, self.rgg.eta, self.rgg.r_max)
            self.k_near = None

        for vid in range(self._n_states):
            if self._is_vertex[vid]:
                self._push_qv(vid)
        self.samples_index.rebuild()
        self.vertex_index.rebuild()
        self._batch_open = True
        return StepOutcome.BATCH_STARTED

    def prune(self) -> list[int]:
        """Drop states that cannot better the current solution; recycle the rest.

        Samples go when f_hat >= c_i; tree vertices go when f_hat > c_i or
        their committed cost g_T + h_hat exceeds c_i (children disconnect and
        are swept by the same pass, in increasing pre-prune g_T order).
        Removed vertices with f_hat < c_i are returned for reuse as samples.
        """
        self.counters["prunes_run"] += 1
        ci = self.c_i
        for sid in list(self.samples_index.ids()):
            if self._ghat[sid] + self._hhat[sid] >= ci:
                self._clear_sample(sid)
                self._is_new[sid] = False
                self.counters["samples_pruned"] += 1
        reuse: list[int] = []
        order = sorted((v for v in range(self._n_states) if self._is_vertex[v]),
                       key=lambda v: (self._g[v], v))
        for vid in order:
            fhat = self._ghat[vid] + self._hhat[vid]
            if fhat > ci or self._g[vid] + self._hhat[vid] > ci:
                self._detach(vid)
                for u in self._children[vid]:
                    self._orphan(u)
                self._is_vertex[vid] = False
                self._n_vertices -= 1
                self._unexpanded[vid] = False
                self._delayed[vid] = False
                self._g[vid] = INF
                self._goal_vertices.discard(vid)
                self.vertex_index.remove(vid)
                self.counters["vertices_pruned"] += 1
                if fhat < ci:
                    reuse.append(vid)
                    self.counters["samples_recycled"] += 1
        return reuse

    def _orphan(self, u: int):
        stack = [u]
        while stack:
            w = stack.pop()
            self._g[w] = INF
            stack.extend(self._children[w])

    def drop_unconnected_samples(self):
        """Clear X_samples and restart the uniform-sample count for q.

        Goal states stay: dropping an unreached goal would make it permanently
        unreachable, since edges only ever target states in the sample set.
        """
        for sid in list(self.samples_index.ids()):
            if self._is_goal[sid]:
                continue
            self._clear_sample(sid)
            self._is_new[sid] = False
            self.counters["samples_removed"] += 1
        self._uniform_since_removal = 0

    # ------------------------------------------------------------- expansion

    def jit_update_samples(self, vid: int):
        """Top up samples around vid so its whole neighborhood is covered.

        Draws density * (measure(c_req) - measure(c_sampled)) new states in the
        f_hat shell [c_sampled, c_req), c_req = min(f_hat(v) + 2r, c_i);
        fractional sample counts carry over between calls.
        """
        self.counters["jit_calls"] += 1
        fv = self._ghat[vid] + self._hhat[vid]
        c_req = min(fv + 2.0 * self.radius, self.c_i)
        if not np.isfinite(c_req) or c_req <= self._c_sampled:
            return
        lo = self._informed_measure(self._c_sampled)
        hi = self._informed_measure(c_req)
        want = self.cfg.jit_density * (hi - lo) + self._jit_frac
        m_new = int(round(want))
        self._jit_frac = want - m_new
        for _ in range(m_new):
            x = self.sampler.draw_shell(self.rng, self._c_sampled, c_req)
            self.counters["samples_drawn"] += 1
            self.counters["jit_samples"] += 1
            sid = self._add_state(x)
            self._set_sample(sid, new=True)
        if m_new:
            self._uniform_since_removal += m_new
        self._c_sampled = c_req

    def _informed_measure(self, c: float) -> float:
        if c <= 0.0:
            return 0.0
        if self.cfg.heuristic == "zero":
            from .sampling import unit_ball_measure
            return unit_ball_measure(self.problem.dimension) * c ** self.problem.dimension
        return sum(p.measure(c) for p in self.sampler.phs_list)

    def expand_next_vertex(self):
        """Pop the best vertex and queue its outgoing edges worth considering.

        Old vertices only look at this batch's samples; unexpanded ones see
        every sample and (immediately, or on a later pass when rewiring is
        delayed) nearby tree vertices as rewiring candidates. Insertion filters
        use the admissible estimates g_hat/c_hat/h_hat, not tree costs.
        """
        vid = self._pop_qv()
        if vid is None:
            raise RuntimeError("vertex queue is empty")
        self.counters["vertices_expanded"] += 1
        if self.cfg.jit_sampling:
            self.jit_update_samples(vid)

        was_unexpanded = bool(self._unexpanded[vid])
        if self._fast_samples:
            if was_unexpanded:
                near, chats = self._near_sample_chats(vid)
            else:
                near, chats = self._near_new_sample_chats(vid)
        else:
            near = np.asarray(self._near_samples(vid), dtype=np.int64)
            if not was_unexpanded and near.size:
                near = near[self._is_new[near]]
            chats = None

        gv_hat = self._ghat[vid]
        ci = self.c_i
        if near.size:
            if chats is None:
                diffs = self._coords[near] - self._coords[vid]
                chats = np.sqrt((diffs * diffs).sum(axis=1))
            keep = gv_hat + chats + self._hhat[near] < ci
            self._push_edges_from(vid, near[keep], chats[keep])

        if not self.cfg.delayed_rewiring:
            if was_unexpanded:
                self._queue_rewirings(vid)
                self._unexpanded[vid] = False
        else:
            if was_unexpanded:
                self._unexpanded[vid] = False
                self._delayed[vid] = True
            elif self._delayed[vid] and np.isfinite(ci):
                self._queue_rewirings(vid)
                self._delayed[vid] = False
        return StepOutcome.VERTEX_EXPANDED

    def _queue_rewirings(self, vid: int):
        gv_hat = self._ghat[vid]
        ci = self.c_i
        near = np.asarray(self._near_vertices(vid), dtype=np.int64)
        if not near.size:
            return
        near = near[self._parent[near] != vid]  # skip existing tree edges
        if not near.size:
            return
        diffs = self._coords[near] - self._coords[vid]
        chats = np.sqrt((diffs * diffs).sum(axis=1))
        est = gv_hat + chats
        keep = (est + self._hhat[near] < ci) & (est < self._g[near])
        self._push_edges_from(vid, near[keep], chats[keep])

    # ------------------------------------------------------------ processing

    def process_best_edge(self):
        """Pop the best edge; add it, discard it, or declare the batch done.

        The batch is done when even the best edge's optimistic total cannot
        better the current solution. The true edge cost (the only collision
        check) is computed only after that screen and the can-it-better-the
        -target screen both pass.
        """
        eid = self._pop_edge()
        if eid is None:
            raise RuntimeError("edge queue is empty")
        if self.cfg.check_queue_order:
            self._assert_queue_order(eid)
        self.counters["edges_processed"] += 1
        v, x = self._e_src[eid], self._e_tgt[eid]
        chat = self._e_chat[eid]
        ci = self.c_i
        gv = self._g[v]

        if not gv + chat + self._hhat[x] < ci:
            self._clear_queues()
            self.counters["batches_completed"] += 1
            self._batch_open = False
            return StepOutcome.BATCH_EXHAUSTED
        if not gv + chat < self._g[x]:
            self.counters["edges_discarded"] += 1
            return StepOutcome.EDGE_DISCARDED

        c_edge = self._eval_edge(v, x)
        self.counters["collision_checks"] += 1
        if not gv + c_edge + self._hhat[x] < ci:
            self.counters["edges_discarded"] += 1
            return StepOutcome.EDGE_DISCARDED
        if not gv + c_edge < self._g[x]:
            self.counters["edges_discarded"] += 1
            return StepOutcome.EDGE_DISCARDED

        if self._is_vertex[x]:
            self._detach(x)
            updated = self._attach(x, v, c_edge)
            self._on_g_decreased(updated)
            self.counters["rewirings"] += 1
        else:
            self._clear_sample(x)
            self._make_vertex(x, parent=v, cost=c_edge, g=gv + c_edge)
            self._unexpanded[x] = True
            self._push_qv(x)
            if self._is_goal[x]:
                self._goal_vertices.add(x)
        improved = self._refresh_ci()
        if self.cfg.edge_queue_purge:
            for e2 in self._e_by_tgt.get(x, ()):
                if self._e_alive[e2] and self._ghat[self._e_src[e2]] + self._e_chat[e2] >= self._g[x]:
                    self._kill_edge(e2)
                    self.counters["queue_entries_purged"] += 1
        if self.cfg.check_tree:
            self._assert_tree_consistent()
        self._last_edge_improved = improved
        return StepOutcome.EDGE_ADDED

    # ------------------------------------------------------------------ step

    def step(self) -> StepOutcome:
        """One queue operation. Drives batches, expansion, and edge processing."""
        if self._converged:
            return StepOutcome.CONVERGED
        self.counters["work_units"] += 1
        if self._qe_live == 0 and not self._in_qv:
            if self._batch_open and self.batch_index >= 1:
                # the batch drained without tripping the exhaustion screen
                self._batch_open = False
                self.counters["batches_completed"] += 1
                return StepOutcome.BATCH_EXHAUSTED
            return self.start_new_batch()
        if self.best_vertex_value() <= self.best_edge_value():
            return self.expand_next_vertex()
        return self.process_best_edge()

    def solve(self, budget_s: float | None = None, *, target_cost: float | None = None,
              max_batches: int | None = None, stop_on_first_solution: bool = False,
              max_steps: int | None = None, callback=None) -> PlanResult:
        """Run until the budget, target, batch, or step limit; report the best plan.

        callback(elapsed_s, cost, path) fires synchronously on every solution
        improvement. The wall clock is checked once per queue operation, so
        overshoot is bounded by one edge evaluation.
        """
        if budget_s is None and target_cost is None and max_batches is None and max_steps is None:
            raise ValueError("solve needs at least one stop condition")
        t0 = time.perf_counter()
        status = "running"
        steps = 0
        if self._converged and callback is not None and np.isfinite(self.c_i):
            callback(0.0, self.c_i, self.best_path())
        while True:
            if budget_s is not None and time.perf_counter() - t0 >= budget_s:
                status = "budget"
                break
            if max_steps is not None and steps >= max_steps:
                status = "steps"
                break
            outcome = self.step()
            steps += 1
            if outcome is StepOutcome.EDGE_ADDED and self._last_edge_improved:
                if callback is not None:
                    callback(time.perf_counter() - t0, self.c_i, self.best_path())
                if stop_on_first_solution:
                    status = "first_solution"
                    break
                if target_cost is not None and self.c_i <= target_cost:
                    status = "target"
                    break
            if outcome is StepOutcome.CONVERGED:
                status = "converged"
                break
            if outcome is StepOutcome.BATCH_EXHAUSTED and max_batches is not None \
                    and self.counters["batches_completed"] >= max_batches:
                status = "batches"
                break
        counters = dict(self.counters)
        counters["shell_fallbacks"] = self.sampler.fallback_count
        return PlanResult(
            solved=bool(np.isfinite(self.c_i)),
            cost=float(self.c_i),
            path=self.best_path(),
            counters=counters,
            status=status,
            planner="bitstar",
            seed=self.seed,
        )

    # ----------------------------------------------------------- debug hooks

    def debug_edge_queue(self):
        """Alive (src, tgt, key) triples, for tests."""
        return [
            (self._e_src[e], self._e_tgt[e], self._e_key[e])
            for e in range(len(self._e_src)) if self._e_alive[e]
        ]

    def debug_vertex_queue(self):
        return [(vid, self._qv_key[vid]) for vid in self._in_qv]

    def _assert_queue_order(self, eid: int):
        key = self._e_key[eid]
        for other in range(len(self._e_src)):
            if self._e_alive[other]:
                assert key <= self._e_key[other], "edge popped out of order"
        for vid in self._in_qv:
            assert key[0] < self._qv_key[vid][0], "vertex should have expanded first"

    def _assert_tree_consistent(self):
        seen = set()
        for vid in range(self._n_states):
            if not self._is_vertex[vid]:
                continue
            chain = []
            u = vid
            while u >= 0 and u not in seen:
                chain.append(u)
                assert len(chain) <= self._n_vertices, "cycle in tree"
                u = int(self._parent[u])
            seen.update(chain)
            if self._parent[vid] >= 0:
                expect = self._g[self._parent[vid]] + self._edge_cost[vid]
                assert abs(self._g[vid] - expect) <= 1e-9, "stale cached cost"
