"""Random-geometric-graph connection bounds and the near-neighbor index.

The almost-sure asymptotic optimality of the batch search rests on connecting
each state to every other state within a radius (or k-nearest count) that
shrinks with the number of uniformly distributed states q. The bounds here are
scaled by a tuning factor eta >= 1; benchmarks use eta = 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .sampling import unit_ball_measure


def radius_bound(q, dimension: int, measure: float, eta: float = 1.0,
                 r_max: float = float("inf")) -> float:
    """Connection radius for q uniform states in a region of the given measure.

    r = eta * (2 (1 + 1/n) * (measure / zeta_n) * (log q / q))^(1/n), clamped
    to r_max. measure is min(space measure, informed measure) in practice.
    """
    if q < 2:
        raise ValueError("radius bound needs q >= 2")
    if not np.isfinite(measure) or measure <= 0.0:
        raise ValueError("measure must be positive and finite")
    n = dimension
    inner = 2.0 * (1.0 + 1.0 / n) * (measure / unit_ball_measure(n)) * (math.log(q) / q)
    return min(eta * inner ** (1.0 / n), r_max)


def k_bound(q, dimension: int, eta: float = 1.0) -> int:
    """Connection count for q uniform states: ceil(eta * e * (1 + 1/n) * log q)."""
    if q < 2:
        raise ValueError("k bound needs q >= 2")
    return int(math.ceil(eta * math.e * (1.0 + 1.0 / dimension) * math.log(q)))


@dataclass
class RggParams:
    """Connection-rule inputs shared by the batch planner and RRT*-family rewiring."""

    dimension: int
    space_measure: float
    mode: str = "r_disc"  # or "k_nearest"
    eta: float = 2.0
    r_max: float = float("inf")
    batch_size_m: int = 100
    threshold_initial_radius: bool = True

    def __post_init__(self):
        if self.mode not in ("r_disc", "k_nearest"):
            raise ValueError(f"unknown connection mode {self.mode!r}")
        if self.eta < 1.0:
            raise ValueError("eta must be >= 1 (smaller forfeits the optimality bound)")


class SpatialIndex:
    """Near-neighbor queries over integer-id'd states.

    Built for batch workloads: a kd-tree is bulk-built over the current
    population, later inserts accumulate in a linearly scanned pending buffer,
    and removals are tombstones. A rebuild (explicit per batch, or automatic
    when the pending buffer outgrows its limit or >= 50% of the tree is dead)
    compacts everything back into one tree. Results are sorted by
    (distance, insertion order) so queries are deterministic under ties.
    """

    def __init__(self, dimension: int, pending_limit: int = 64):
        self.dimension = dimension
        self.pending_limit = pending_limit
        self._tree = None
        self._tree_ids = np.empty(0, dtype=np.int64)
        self._tree_pts = np.empty((0, dimension))
        self._tree_seqs = np.empty(0, dtype=np.int64)
        self._tree_alive = np.empty(0, dtype=bool)
        self._tree_row: dict[int, int] = {}
        self._pending_ids: list[int] = []
        self._pending_pts: list[np.ndarray] = []
        self._alive: dict[int, int] = {}  # id -> insertion sequence
        self._coords: dict[int, np.ndarray] = {}
        self._seq = 0
        self._dead_in_tree = 0

    def __len__(self) -> int:
        return len(self._alive)

    def __contains__(self, sid: int) -> bool:
        return sid in self._alive

    def ids(self) -> list[int]:
        return sorted(self._alive, key=self._alive.get)

    def insert(self, sid: int, point) -> None:
        if sid in self._alive:
            raise ValueError(f"id {sid} already present")
        p = np.asarray(point, dtype=float)
        self._alive[sid] = self._seq
        self._seq += 1
        self._coords[sid] = p
        self._pending_ids.append(sid)
        self._pending_pts.append(p)
        if len(self._pending_ids) > self.pending_limit:
            self.rebuild()

    def remove(self, sid: int) -> None:
        if sid not in self._alive:
            raise KeyError(sid)
        del self._alive[sid]
        del self._coords[sid]
        if sid in self._tree_row:
            self._tree_alive[self._tree_row[sid]] = False
            del self._tree_row[sid]
            self._dead_in_tree += 1
            if self._dead_in_tree * 2 >= max(len(self._tree_ids), 1):
                self.rebuild()
        else:
            i = self._pending_ids.index(sid)
            self._pending_ids.pop(i)
            self._pending_pts.pop(i)

    def rebuild(self) -> None:
        """Compact tombstones and pending inserts into a fresh bulk-built tree."""
        ids = self.ids()
        self._tree_ids = np.asarray(ids, dtype=np.int64)
        self._tree_pts = (
            np.stack([self._coords[i] for i in ids]) if ids else np.empty((0, self.dimension))
        )
        self._tree_seqs = np.asarray([self._alive[i] for i in ids], dtype=np.int64)
        self._tree_alive = np.ones(len(ids), dtype=bool)
        self._tree_row = {sid: row for row, sid in enumerate(ids)}
        self._tree = cKDTree(self._tree_pts) if ids else None
        self._pending_ids = []
        self._pending_pts = []
        self._dead_in_tree = 0

    def _pending_arrays(self, x: np.ndarray):
        pts = np.stack(self._pending_pts)
        d = np.sqrt(((pts - x) ** 2).sum(axis=1))
        ids = np.asarray(self._pending_ids, dtype=np.int64)
        seqs = np.asarray([self._alive[s] for s in self._pending_ids], dtype=np.int64)
        return d, seqs, ids

    @staticmethod
    def _ranked(d_parts, seq_parts, id_parts, exclude):
        d = np.concatenate(d_parts)
        seqs = np.concatenate(seq_parts)
        sids = np.concatenate(id_parts)
        order = np.lexsort((seqs, d))
        out = sids[order]
        if exclude is not None:
            out = out[out != exclude]
        return out.tolist()

    def radius(self, x, r: float, exclude=None) -> list[int]:
        """Ids with distance <= r from x, nearest first; ties by insertion order."""
        x = np.asarray(x, dtype=float)
        d_parts, seq_parts, id_parts = [], [], []
        if self._tree is not None:
            if np.isfinite(r):
                rows = np.asarray(self._tree.query_ball_point(x, r), dtype=np.intp)
            else:
                rows = np.arange(len(self._tree_ids), dtype=np.intp)
            if rows.size:
                rows = rows[self._tree_alive[rows]]
            if rows.size:
                pts = self._tree_pts[rows]
                d_parts.append(np.sqrt(((pts - x) ** 2).sum(axis=1)))
                seq_parts.append(self._tree_seqs[rows])
                id_parts.append(self._tree_ids[rows])
        if self._pending_ids:
            d, seqs, ids = self._pending_arrays(x)
            keep = d <= r
            d_parts.append(d[keep])
            seq_parts.append(seqs[keep])
            id_parts.append(ids[keep])
        if not d_parts:
            return []
        return self._ranked(d_parts, seq_parts, id_parts, exclude)

    def knn(self, x, k: int, exclude=None) -> list[int]:
        """The k nearest ids to x; ties broken by insertion order."""
        if k <= 0 or not self._alive:
            return []
        x = np.asarray(x, dtype=float)
        d_parts, seq_parts, id_parts = [], [], []
        if self._tree is not None and len(self._tree_ids):
            want = min(len(self._tree_ids),
                       k + self._dead_in_tree + (1 if exclude is not None else 0))
            _, rows = self._tree.query(x, k=want)
            rows = np.atleast_1d(np.asarray(rows, dtype=np.intp))
            rows = rows[rows < len(self._tree_ids)]
            rows = rows[self._tree_alive[rows]]
            if rows.size:
                pts = self._tree_pts[rows]
                d_parts.append(np.sqrt(((pts - x) ** 2).sum(axis=1)))
                seq_parts.append(self._tree_seqs[rows])
                id_parts.append(self._tree_ids[rows])
        if self._pending_ids:
            d, seqs, ids = self._pending_arrays(x)
            d_parts.append(d)
            seq_parts.append(seqs)
            id_parts.append(ids)
        if not d_parts:
            return []
        return self._ranked(d_parts, seq_parts, id_parts, exclude)[:k]
