"""Direct informed sampling for L2 path length.

Once a solution of cost c exists, any state that could improve it lies in the
prolate hyperspheroid (PHS) with the start and a goal as foci, transverse
diameter c, and conjugate diameter sqrt(c^2 - c_min^2). Sampling that set
directly instead of rejecting from the whole space keeps the per-sample cost
constant as the solution tightens. With several goals the informed set is the
union of one PHS per goal; uniformity over the union is restored by accepting
a draw with probability 1/(number of PHSs containing it).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import AxisBox, ProblemDef, f_hat

# rejection attempts before shell sampling falls back to the outer region
SHELL_REJECT_CAP = 10_000
_REJECT_CAP = 1_000_000


def make_rng(seed: int) -> np.random.Generator:
    """64-bit-seeded generator; identical seed + call sequence -> identical samples."""
    return np.random.default_rng(int(seed))


def unit_ball_measure(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def phs_measure(n: int, c_min: float, c: float) -> float:
    """Measure of the PHS with focal distance c_min and transverse diameter c.

    Degenerate inputs (c <= c_min, e.g. the zero lower bound used by shell
    bookkeeping) are an empty set with measure 0.
    """
    if c_min < 0.0:
        raise ValueError("c_min must be >= 0")
    if not np.isfinite(c) or c <= c_min:
        return 0.0 if np.isfinite(c) else float("inf")
    return c * (c * c - c_min * c_min) ** ((n - 1) / 2.0) * unit_ball_measure(n) / 2.0 ** n


def sample_unit_ball(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform point in the unit n-ball: normalized gaussian direction, U^(1/n) radius."""
    z = rng.standard_normal(n)
    norm = np.linalg.norm(z)
    while norm == 0.0:  # probability-zero guard
        z = rng.standard_normal(n)
        norm = np.linalg.norm(z)
    r = rng.random() ** (1.0 / n)
    return z * (r / norm)


def sample_uniform_box(rng: np.random.Generator, bounds: AxisBox) -> np.ndarray:
    return bounds.lower + rng.random(bounds.dimension) * (bounds.upper - bounds.lower)


def _rotation_to_world(a1: np.ndarray) -> np.ndarray:
    """Rotation whose first column is a1, completed deterministically via SVD."""
    n = a1.shape[0]
    e1 = np.zeros(n)
    e1[0] = 1.0
    u, _, vt = np.linalg.svd(np.outer(a1, e1))
    diag = np.ones(n)
    diag[-1] = np.linalg.det(u) * np.linalg.det(vt)
    return u @ np.diag(diag) @ vt


@dataclass
class ProlateHyperspheroid:
    """The informed set for one start/goal pair under L2 cost.

    The world rotation is fixed by the foci; only the axis lengths depend on
    the current best cost, so one object serves every c_best.
    """

    focus_a: np.ndarray
    focus_b: np.ndarray

    def __post_init__(self):
        self.focus_a = np.asarray(self.focus_a, dtype=float)
        self.focus_b = np.asarray(self.focus_b, dtype=float)
        if self.focus_a.shape != self.focus_b.shape:
            raise ValueError("foci must share a dimension")
        self.c_min = float(np.linalg.norm(self.focus_b - self.focus_a))
        self.center = 0.5 * (self.focus_a + self.focus_b)
        n = self.focus_a.shape[0]
        if self.c_min > 0.0:
            self.rotation_world = _rotation_to_world((self.focus_b - self.focus_a) / self.c_min)
        else:
            self.rotation_world = np.eye(n)

    @property
    def dimension(self) -> int:
        return self.focus_a.shape[0]

    def measure(self, c_best: float) -> float:
        return phs_measure(self.dimension, self.c_min, c_best)

    def _radii(self, c_best: float) -> np.ndarray:
        r = np.empty(self.dimension)
        r[0] = c_best / 2.0
        r[1:] = math.sqrt(max(c_best * c_best - self.c_min * self.c_min, 0.0)) / 2.0
        return r

    def transform(self, ball_point: np.ndarray, c_best: float) -> np.ndarray:
        """Map a unit-ball point into the PHS of transverse diameter c_best."""
        return self.rotation_world @ (self._radii(c_best) * ball_point) + self.center

    def sample(self, rng: np.random.Generator, c_best: float) -> np.ndarray:
        if not np.isfinite(c_best) or c_best <= self.c_min:
            raise ValueError("c_best must be finite and > c_min to sample the PHS")
        return self.transform(sample_unit_ball(rng, self.dimension), c_best)

    def contains(self, x, c_best: float) -> bool:
        x = np.asarray(x, dtype=float)
        return (
            np.linalg.norm(x - self.focus_a) + np.linalg.norm(x - self.focus_b)
        ) <= c_best

    def aabb(self, c_best: float) -> AxisBox:
        """Axis-aligned bounding box of the PHS in world coordinates."""
        half = np.sqrt(((self.rotation_world * self._radii(c_best)) ** 2).sum(axis=1))
        return AxisBox(self.center - half, self.center + half)


class InformedSampler:
    """Draws states uniformly from the informed set of a problem, clipped to bounds.

    heuristic="l2" uses one PHS per goal; heuristic="zero" degrades the informed
    set to the ball {g_hat(x) < c_best} around the start (used when planners run
    without a cost-to-go heuristic). With c_best = +inf both modes sample the
    bounds uniformly. Whichever of the informed region and the bounding box is
    smaller by measure is sampled directly, rejecting against the other.
    """

    def __init__(self, problem: ProblemDef, heuristic: str = "l2"):
        if heuristic not in ("l2", "zero"):
            raise ValueError(f"unknown heuristic {heuristic!r}")
        self.problem = problem
        self.heuristic = heuristic
        self.phs_list = [ProlateHyperspheroid(problem.start, g) for g in problem.goals]
        self.fallback_count = 0  # shell draws that fell back to the outer region
        self.redraw_count = 0    # draws rejected for f_hat rounding up to c_best

    def measure(self, c_best: float) -> float:
        """Measure of the sampled region, min(bounds, informed estimate).

        Multi-goal informed measure is upper-bounded by the sum over PHSs
        (exact for one goal); the radius bound shrinks no faster than truth.
        """
        space = self.problem.space_measure()
        if not np.isfinite(c_best):
            return space
        if self.heuristic == "zero":
            informed = unit_ball_measure(self.problem.dimension) * c_best ** self.problem.dimension
        else:
            informed = sum(p.measure(c_best) for p in self.phs_list)
        return min(space, informed)

    def _weights(self, c_best: float) -> np.ndarray:
        return np.array([p.measure(c_best) for p in self.phs_list])

    def draw(self, rng: np.random.Generator, c_best: float) -> np.ndarray:
        """One state with f_hat(x) < c_best (strictly), uniform over the region."""
        problem, bounds = self.problem, self.problem.bounds
        if not np.isfinite(c_best):
            return sample_uniform_box(rng, bounds)
        for _ in range(_REJECT_CAP):
            x = self._draw_once(rng, c_best)
            if x is None:
                continue
            if f_hat(problem, x) < c_best or (self.heuristic == "zero" and self._ghat(x) < c_best):
                return x
            self.redraw_count += 1  # boundary rounding, probability ~ 0
        raise RuntimeError("informed sampling failed to accept; region is degenerate")

    def _ghat(self, x) -> float:
        return float(np.linalg.norm(x - self.problem.start))

    def _draw_once(self, rng, c_best):
        problem, bounds = self.problem, self.problem.bounds
        if self.heuristic == "zero":
            ball = unit_ball_measure(problem.dimension) * c_best ** problem.dimension
            if ball <= problem.space_measure():
                x = problem.start + c_best * sample_unit_ball(rng, problem.dimension)
                return x if bounds.contains_closed(x) else None
            x = sample_uniform_box(rng, bounds)
            return x if self._ghat(x) < c_best else None
        weights = self._weights(c_best)
        total = float(weights.sum())
        if total <= 0.0:
            raise ValueError("all informed sets are empty for this c_best")
        if total >= problem.space_measure():
            # union may cover most of the bounds: reject from the box instead
            x = sample_uniform_box(rng, bounds)
            return x if f_hat(problem, x) < c_best else None
        idx = rng.choice(len(self.phs_list), p=weights / total)
        x = self.phs_list[idx].sample(rng, c_best)
        if not bounds.contains_closed(x):
            return None
        containing = sum(1 for p, w in zip(self.phs_list, weights) if w > 0.0 and p.contains(x, c_best))
        if containing > 1 and rng.random() >= 1.0 / containing:
            return None
        return x

    def draw_shell(self, rng: np.random.Generator, c_lo: float, c_hi: float) -> np.ndarray:
        """One state with c_lo <= f_hat(x) < c_hi, uniform over the shell.

        Draws from the outer region and rejects the inner part. When the
        shell is a sliver of the outer region (or after SHELL_REJECT_CAP
        misses), the outer region is sampled as-is and the fallback counter
        is bumped; rejection would burn thousands of draws for one accept.
        """
        if not (0.0 <= c_lo < c_hi):
            raise ValueError("shell needs 0 <= c_lo < c_hi")
        if self.heuristic != "zero":
            outer = self.measure(c_hi)
            if np.isfinite(outer) and outer > 0.0 and self.measure(c_lo) / outer > 0.98:
                self.fallback_count += 1
                return self.draw(rng, c_hi)
        problem = self.problem
        if self.heuristic == "zero":
            # exact annulus draw, no rejection needed
            n = problem.dimension
            lo_n = max(c_lo, 0.0) ** n
            r = (lo_n + rng.random() * (c_hi ** n - lo_n)) ** (1.0 / n)
            z = sample_unit_ball(rng, n)
            nz = np.linalg.norm(z)
            direction = z / nz if nz > 0 else np.eye(n)[0]
            for _ in range(_REJECT_CAP):
                x = problem.start + r * direction
                if problem.bounds.contains_closed(x) and self._ghat(x) < c_hi:
                    return x
                z = sample_unit_ball(rng, n)
                nz = np.linalg.norm(z)
                direction = z / nz if nz > 0 else direction
                r = (lo_n + rng.random() * (c_hi ** n - lo_n)) ** (1.0 / n)
            raise RuntimeError("shell sampling failed to accept")
        for _ in range(SHELL_REJECT_CAP):
            x = self.draw(rng, c_hi)
            if f_hat(problem, x) >= c_lo:
                return x
        self.fallback_count += 1
        return self.draw(rng, c_hi)
