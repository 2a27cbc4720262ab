"""Geometric primitives: planning problems, axis-aligned obstacles, exact edge
validity, and the L2 cost estimates used by every planner in this package.

Obstacles are axis-aligned boxes whose boundaries are free: a state on a face
is valid, a segment grazing a face tangentially is collision-free, and only
segments that spend positive length inside an open box interior are blocked.
All checks are exact (interval clipping), not discretized.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_point(x, dim=None):
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"expected a 1-D state, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {p.shape[0]}")
    return p


@dataclass(frozen=True)
class AxisBox:
    """Closed axis-aligned box [lower, upper]; its open interior is the blocked set."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_point(self.lower)
        hi = _as_point(self.upper, dim=lo.shape[0])
        if np.any(hi < lo):
            raise ValueError("box upper must be >= lower on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    def measure(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def contains_open(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.lower < x) and np.all(x < self.upper))

    def contains_closed(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.lower <= x) and np.all(x <= self.upper))


@dataclass
class ProblemDef:
    """A planning query: bounds, start, goal states, and box obstacles.

    collision_resolution is accepted for interface compatibility and unused:
    edge checks are exact, so there is no discretization step to configure.
    """

    bounds: AxisBox
    start: np.ndarray
    goals: list
    obstacles: list = field(default_factory=list)
    collision_resolution: float | None = None

    def __post_init__(self):
        n = self.bounds.dimension
        self.start = _as_point(self.start, dim=n)
        self.goals = [_as_point(g, dim=n) for g in self.goals]
        if not self.goals:
            raise ValueError("problem needs at least one goal state")
        for box in self.obstacles:
            if box.dimension != n:
                raise ValueError(f"dimension mismatch: obstacle is {box.dimension}-D in a {n}-D problem")
        # stacked copies for vectorized segment tests
        if self.obstacles:
            self._obs_lo = np.stack([b.lower for b in self.obstacles])
            self._obs_hi = np.stack([b.upper for b in self.obstacles])
        else:
            self._obs_lo = np.empty((0, n))
            self._obs_hi = np.empty((0, n))
        self._goal_arr = np.stack(self.goals)

    @property
    def dimension(self) -> int:
        return self.bounds.dimension

    def space_measure(self) -> float:
        return self.bounds.measure()


def g_hat(problem: ProblemDef, x) -> float:
    """Admissible cost-to-come estimate: straight-line distance from the start."""
    return float(np.linalg.norm(np.asarray(x, dtype=float) - problem.start))


def h_hat(problem: ProblemDef, x) -> float:
    """Admissible cost-to-go estimate: distance to the nearest goal."""
    d = problem._goal_arr - np.asarray(x, dtype=float)
    return float(np.sqrt((d * d).sum(axis=1)).min())


def f_hat(problem: ProblemDef, x) -> float:
    """Admissible total-cost estimate of a path constrained through x."""
    return g_hat(problem, x) + h_hat(problem, x)


def c_hat(x, y) -> float:
    """Admissible edge cost estimate: straight-line length, no collision check."""
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


def f_hat_many(problem: ProblemDef, xs) -> np.ndarray:
    """f_hat evaluated along the rows of xs."""
    xs = np.asarray(xs, dtype=float)
    ghat = np.linalg.norm(xs - problem.start, axis=1)
    d = xs[:, None, :] - problem._goal_arr[None, :, :]
    hhat = np.sqrt((d * d).sum(axis=2)).min(axis=1)
    return ghat + hhat


def is_state_valid(problem: ProblemDef, x) -> bool:
    """True if x is inside the (closed) bounds and in no obstacle's open interior."""
    x = np.asarray(x, dtype=float)
    if not problem.bounds.contains_closed(x):
        return False
    if problem._obs_lo.shape[0] == 0:
        return True
    inside = np.all(problem._obs_lo < x, axis=1) & np.all(x < problem._obs_hi, axis=1)
    return not bool(inside.any())


def segments_blocked(problem: ProblemDef, xs, ys) -> np.ndarray:
    """Vectorized exact segment-vs-obstacle test for S segments at once.

    Returns a boolean array of length S; True means the segment spends positive
    length inside some obstacle's open interior (grazing a face does not count).
    Bounds are NOT checked here; callers check endpoint validity separately
    (segments between in-bounds endpoints stay in bounds by convexity).
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    S, n = xs.shape
    lo, hi = problem._obs_lo, problem._obs_hi
    B = lo.shape[0]
    if B == 0:
        return np.zeros(S, dtype=bool)
    d = ys - xs                                     # (S, n)
    p = xs[:, None, :]                              # (S, 1, n)
    invd = np.zeros_like(d)
    np.divide(1.0, d, out=invd, where=d != 0.0)     # parallel axes fixed up below
    q = invd[:, None, :]                            # (S, 1, n)
    t1 = (lo[None, :, :] - p) * q                   # (S, B, n)
    t2 = (hi[None, :, :] - p) * q
    t_lo = np.minimum(t1, t2)
    t_hi = np.maximum(t1, t2)
    par = d[:, None, :] == 0.0
    if par.any():
        inside = (lo[None, :, :] < p) & (p < hi[None, :, :])
        t_lo = np.where(par, np.where(inside, -np.inf, np.inf), t_lo)
        t_hi = np.where(par, np.where(inside, np.inf, -np.inf), t_hi)
    enter = np.maximum(t_lo.max(axis=2), 0.0)       # (S, B)
    exit_ = np.minimum(t_hi.min(axis=2), 1.0)
    return (enter < exit_).any(axis=1)              # strict: tangent contact is free


def segment_blocked_one(problem: ProblemDef, x: np.ndarray, y: np.ndarray) -> bool:
    """segments_blocked for a single segment, skipping the batch plumbing.

    Same slab arithmetic and the same strict interior test; kept separate
    because planners evaluate edges one at a time and the (S, B, n) broadcast
    machinery costs more than the test itself at S = 1.
    """
    lo, hi = problem._obs_lo, problem._obs_hi
    if lo.shape[0] == 0:
        return False
    d = y - x
    nz = d != 0.0
    invd = np.zeros_like(d)
    np.divide(1.0, d, out=invd, where=nz)
    t1 = (lo - x) * invd
    t2 = (hi - x) * invd
    t_lo = np.minimum(t1, t2)
    t_hi = np.maximum(t1, t2)
    if not nz.all():
        par = ~nz
        inside = (lo[:, par] < x[par]) & (x[par] < hi[:, par])
        t_lo[:, par] = np.where(inside, -np.inf, np.inf)
        t_hi[:, par] = np.where(inside, np.inf, -np.inf)
    enter = np.maximum(t_lo.max(axis=1), 0.0)
    exit_ = np.minimum(t_hi.min(axis=1), 1.0)
    return bool((enter < exit_).any())


def c_true(problem: ProblemDef, x, y) -> float:
    """True edge cost: straight-line length if the motion is valid, else +inf.

    This is the only operation that performs collision checking; planners count
    calls to it.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (is_state_valid(problem, x) and is_state_valid(problem, y)):
        return float("inf")
    if bool(segments_blocked(problem, x[None, :], y[None, :])[0]):
        return float("inf")
    return c_hat(x, y)


def path_cost(problem: ProblemDef, waypoints) -> float:
    """Total cost of a waypoint path; +inf if any segment is invalid."""
    pts = [np.asarray(w, dtype=float) for w in waypoints]
    if len(pts) == 0:
        return float("inf")
    if len(pts) == 1:
        return 0.0 if is_state_valid(problem, pts[0]) else float("inf")
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        c = c_true(problem, a, b)
        if not np.isfinite(c):
            return float("inf")
        total += c
    return total
