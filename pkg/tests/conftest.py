"""Shared test helpers: independent reference checks and reporting hooks.

The acceptance tests register one line per criterion; the terminal summary
hook prints them all at the end of the run so the pass/fail table is visible
even when every test passes.
"""
import math

import numpy as np
import pytest

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, passed: bool, detail: str):
    ACCEPTANCE_LINES[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        passed, detail = ACCEPTANCE_LINES[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict} - {detail}")


def blocked_discretized(problem, a, b, resolution=1e-4) -> bool:
    """Pointwise reference collision check: sample the segment at the given
    spacing and flag it when any sampled point lies strictly inside an
    obstacle. Misses crossings shorter than the spacing by construction."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not problem.obstacles:
        return False
    lo = np.stack([box.lower for box in problem.obstacles])
    hi = np.stack([box.upper for box in problem.obstacles])
    length = float(np.linalg.norm(b - a))
    m = max(int(math.ceil(length / resolution)), 1)
    ts = np.arange(m + 1) / m
    pts = a + ts[:, None] * (b - a)
    inside = (pts[:, None, :] > lo).all(axis=2) & (pts[:, None, :] < hi).all(axis=2)
    return bool(inside.any())


def random_box_problem(rng: np.random.Generator, dimension: int, n_boxes: int = 12):
    """A self-contained random world for oracle comparisons (start and goal
    kept out of every box's interior)."""
    from batchplan.geometry import AxisBox, ProblemDef

    half = 1.0
    start = np.full(dimension, -0.8)
    goal = np.full(dimension, 0.8)
    boxes = []
    while len(boxes) < n_boxes:
        center = rng.uniform(-half, half, size=dimension)
        sides = rng.uniform(0.1, 0.5, size=dimension)
        box = AxisBox(center - sides / 2.0, center + sides / 2.0)
        if box.contains_open(start) or box.contains_open(goal):
            continue
        boxes.append(box)
    bounds = AxisBox(np.full(dimension, -half), np.full(dimension, half))
    return ProblemDef(bounds=bounds, start=start, goals=[goal], obstacles=boxes)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
