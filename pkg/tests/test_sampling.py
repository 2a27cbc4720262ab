"""Informed-set sampling tests.

Measure formulas are checked against closed forms and frozen constants that
were computed independently from the analytic expression
    measure = zeta_n * (c/2) * (sqrt(c^2 - c_min^2)/2)^(n-1),
and against seeded Monte-Carlo rejection estimates. Sampler output is checked
for containment, uniformity (chi-squared on the pulled-back ball coordinates),
and determinism.
"""
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from batchplan.geometry import AxisBox, ProblemDef, f_hat
from batchplan.sampling import (
    InformedSampler, ProlateHyperspheroid, make_rng, phs_measure,
    sample_unit_ball, sample_uniform_box, unit_ball_measure,
)

# n: closed-form unit-ball measure, written out rather than via the gamma
# function so the table is an independent derivation
BALL_CLOSED_FORM = {
    1: 2.0,
    2: math.pi,
    3: 4.0 * math.pi / 3.0,
    4: math.pi ** 2 / 2.0,
    5: 8.0 * math.pi ** 2 / 15.0,
    6: math.pi ** 3 / 6.0,
    7: 16.0 * math.pi ** 3 / 105.0,
    8: math.pi ** 4 / 24.0,
    9: 32.0 * math.pi ** 4 / 945.0,
    10: math.pi ** 5 / 120.0,
}

# (n, c_min, c) -> analytic measure, frozen from the expression above
PHS_MEASURE_FROZEN = [
    (2, 1.0, 1.1, 0.39590611878929144),
    (2, 1.0, 1.5, 1.3171527620701362),
    (2, 1.0, 2.0, 2.7206990463513265),
    (3, 1.0, 1.1, 0.12095131716320714),
    (3, 1.0, 1.5, 0.9817477042468106),
    (3, 1.0, 2.0, 3.1415926535897922),  # analytically exactly pi
    (4, 1.0, 1.1, 0.03264911355036678),
    (4, 1.0, 1.5, 0.6465558501523508),
    (4, 1.0, 2.0, 3.205248051242281),
]


def wide_problem(n: int, start=None, goals=None, half_width=50.0):
    """Bounds so large that clipping never interferes."""
    start = np.zeros(n) if start is None else np.asarray(start, dtype=float)
    if goals is None:
        g = np.zeros(n)
        g[0] = 1.0
        goals = [g]
    bounds = AxisBox(np.full(n, -half_width), np.full(n, half_width))
    return ProblemDef(bounds=bounds, start=start, goals=goals)


class TestMeasures:
    def test_unit_ball_closed_forms(self):
        for n, expected in BALL_CLOSED_FORM.items():
            assert unit_ball_measure(n) == pytest.approx(expected, abs=1e-12)

    def test_unit_ball_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            unit_ball_measure(0)

    def test_phs_measure_frozen_table(self):
        for n, c_min, c, expected in PHS_MEASURE_FROZEN:
            assert phs_measure(n, c_min, c) == pytest.approx(expected, rel=1e-12)

    def test_phs_measure_degenerate(self):
        assert phs_measure(3, 1.0, 1.0) == 0.0
        assert phs_measure(3, 1.0, 0.5) == 0.0
        assert phs_measure(3, 1.0, math.inf) == math.inf
        with pytest.raises(ValueError):
            phs_measure(3, -0.1, 1.0)

    def test_phs_zero_focal_distance_is_a_ball(self):
        # c_min = 0 degenerates to the ball of diameter c
        for n in (2, 3, 4):
            assert phs_measure(n, 0.0, 2.0) == pytest.approx(unit_ball_measure(n), rel=1e-12)

    def test_monte_carlo_rejection_estimate(self):
        """Seeded rejection sampling over the bounding box reproduces the
        analytic measure; heavier sampling of the same check runs in the
        acceptance suite."""
        rng = make_rng(7)
        for n, c in ((2, 1.5), (3, 2.0)):
            a = np.zeros(n)
            b = np.zeros(n)
            b[0] = 1.0
            phs = ProlateHyperspheroid(a, b)
            aabb = phs.aabb(c)
            m_points = 2_000_000
            pts = aabb.lower + rng.random((m_points, n)) * (aabb.upper - aabb.lower)
            inside = (
                np.linalg.norm(pts - a, axis=1) + np.linalg.norm(pts - b, axis=1) <= c
            )
            estimate = aabb.measure() * inside.mean()
            assert estimate == pytest.approx(phs_measure(n, 1.0, c), rel=0.005)


class TestProlateHyperspheroid:
    def test_rotation_is_special_orthogonal(self, rng):
        for _ in range(10):
            a = rng.normal(size=4)
            b = a + rng.normal(size=4)
            phs = ProlateHyperspheroid(a, b)
            rot = phs.rotation_world
            assert np.allclose(rot @ rot.T, np.eye(4), atol=1e-12)
            assert np.linalg.det(rot) == pytest.approx(1.0, abs=1e-9)
            main_axis = (np.asarray(b) - a) / np.linalg.norm(np.asarray(b) - a)
            assert np.allclose(rot[:, 0], main_axis, atol=1e-12)

    def test_boundary_maps_to_level_set(self, rng):
        a = np.array([0.2, -0.4, 0.1])
        b = np.array([1.0, 0.3, -0.2])
        phs = ProlateHyperspheroid(a, b)
        c = 1.7
        for _ in range(50):
            u = rng.normal(size=3)
            u /= np.linalg.norm(u)
            x = phs.transform(u, c)
            total = np.linalg.norm(x - a) + np.linalg.norm(x - b)
            assert total == pytest.approx(c, abs=1e-9)

    def test_sample_contained(self, rng):
        a = np.zeros(2)
        b = np.array([1.0, 0.0])
        phs = ProlateHyperspheroid(a, b)
        g = make_rng(3)
        for _ in range(2000):
            x = phs.sample(g, 1.4)
            assert phs.contains(x, 1.4 + 1e-12)

    def test_sample_rejects_infeasible_cost(self):
        phs = ProlateHyperspheroid(np.zeros(2), np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            phs.sample(make_rng(0), 0.9)

    def test_aabb_bounds_the_set(self):
        phs = ProlateHyperspheroid(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
        c = 2.0
        box = phs.aabb(c)
        g = make_rng(5)
        for _ in range(500):
            assert box.contains_closed(phs.sample(g, c))


class TestUnitBall:
    def test_norms_at_most_one(self):
        g = make_rng(11)
        pts = np.array([sample_unit_ball(g, 3) for _ in range(5000)])
        assert (np.linalg.norm(pts, axis=1) <= 1.0 + 1e-12).all()

    def test_radial_distribution(self):
        # |x|^n is uniform on [0, 1] for a uniform ball draw
        g = make_rng(12)
        n = 3
        r_n = np.array([np.linalg.norm(sample_unit_ball(g, n)) ** n for _ in range(20000)])
        counts, _ = np.histogram(r_n, bins=10, range=(0.0, 1.0))
        assert chisquare(counts).pvalue > 1e-3


class TestInformedSampler:
    def test_infinite_cost_samples_whole_bounds(self):
        p = wide_problem(2, half_width=1.0)
        sampler = InformedSampler(p)
        g = make_rng(21)
        pts = np.array([sampler.draw(g, math.inf) for _ in range(20000)])
        assert (np.abs(pts) <= 1.0).all()
        for axis in range(2):
            counts, _ = np.histogram(pts[:, axis], bins=10, range=(-1.0, 1.0))
            assert chisquare(counts).pvalue > 1e-3

    def test_draws_contained_and_uniform(self):
        p = wide_problem(2)
        sampler = InformedSampler(p)
        phs = sampler.phs_list[0]
        c = 1.5
        g = make_rng(22)
        pts = np.array([sampler.draw(g, c) for _ in range(20000)])
        fhats = np.array([f_hat(p, x) for x in pts])
        assert (fhats < c).all()
        # pull back to unit-ball coordinates and test radial uniformity
        radii = np.array([c / 2.0, math.sqrt(c * c - 1.0) / 2.0])
        u = (pts - phs.center) @ phs.rotation_world / radii
        r_n = (np.linalg.norm(u, axis=1)) ** 2
        counts, _ = np.histogram(r_n, bins=10, range=(0.0, 1.0))
        assert chisquare(counts).pvalue > 1e-3
        angles = np.arctan2(u[:, 1], u[:, 0])
        counts, _ = np.histogram(angles, bins=8, range=(-math.pi, math.pi))
        assert chisquare(counts).pvalue > 1e-3

    def test_bounds_clip_informed_set(self):
        # bounds deliberately truncate the informed region
        bounds = AxisBox([-0.1, -2.0], [1.1, 0.05])
        p = ProblemDef(bounds=bounds, start=[0.0, 0.0], goals=[[1.0, 0.0]])
        sampler = InformedSampler(p)
        g = make_rng(23)
        for _ in range(3000):
            x = sampler.draw(g, 1.6)
            assert bounds.contains_closed(x)
            assert f_hat(p, x) < 1.6

    def test_two_goal_union_is_balanced(self):
        p = wide_problem(2, start=[0.0, 0.0], goals=[[1.0, 0.0], [-1.0, 0.0]])
        sampler = InformedSampler(p)
        g = make_rng(24)
        n_draws = 20000
        toward_first = 0
        for _ in range(n_draws):
            x = sampler.draw(g, 1.5)
            assert f_hat(p, x) < 1.5
            if np.linalg.norm(x - [1.0, 0.0]) < np.linalg.norm(x - [-1.0, 0.0]):
                toward_first += 1
        assert toward_first / n_draws == pytest.approx(0.5, abs=0.02)

    def test_union_weighting_keeps_overlap_uniform(self):
        """Two overlapping informed lobes: density near the shared region must
        match density in single-lobe regions (the acceptance probability
        divides out the double coverage)."""
        p = wide_problem(2, start=[0.0, 0.0], goals=[[1.0, 0.0], [-1.0, 0.0]])
        sampler = InformedSampler(p)
        c = 1.8
        phs1, phs2 = sampler.phs_list
        g = make_rng(25)
        pts = np.array([sampler.draw(g, c) for _ in range(40000)])
        in1 = np.array([phs1.contains(x, c) for x in pts])
        in2 = np.array([phs2.contains(x, c) for x in pts])
        # the overlap lens around the start is symmetric to its mirror image;
        # compare observed counts in two equal-measure probe boxes, one inside
        # the overlap and one outside it
        probe_overlap = ((np.abs(pts[:, 0]) < 0.1) & (np.abs(pts[:, 1]) < 0.2)).sum()
        right_lobe = pts[in1 & ~in2]
        probe_single = ((np.abs(right_lobe[:, 0] - 0.9) < 0.1) & (np.abs(right_lobe[:, 1]) < 0.2)).sum()
        assert probe_overlap == pytest.approx(probe_single, rel=0.15)

    def test_zero_heuristic_mode(self):
        p = wide_problem(2, half_width=1.5)
        sampler = InformedSampler(p, heuristic="zero")
        g = make_rng(26)
        c = 1.2
        for _ in range(3000):
            x = sampler.draw(g, c)
            assert np.linalg.norm(x - p.start) < c
        assert sampler.measure(c) == pytest.approx(
            min(unit_ball_measure(2) * c ** 2, p.space_measure()), rel=1e-12)

    def test_measure_caps_at_space(self):
        p = wide_problem(2, half_width=0.6)
        sampler = InformedSampler(p)
        assert sampler.measure(math.inf) == pytest.approx(p.space_measure(), rel=0.0)
        assert sampler.measure(100.0) == pytest.approx(p.space_measure(), rel=0.0)

    def test_unknown_heuristic_rejected(self):
        with pytest.raises(ValueError):
            InformedSampler(wide_problem(2), heuristic="l1")

    def test_determinism(self):
        p = wide_problem(3)
        a = InformedSampler(p)
        b = InformedSampler(p)
        ga, gb = make_rng(31), make_rng(31)
        xa = np.array([a.draw(ga, 1.4) for _ in range(200)])
        xb = np.array([b.draw(gb, 1.4) for _ in range(200)])
        assert np.array_equal(xa, xb)


class TestShellDraws:
    def test_l2_shell_band(self):
        p = wide_problem(2)
        sampler = InformedSampler(p)
        g = make_rng(41)
        for _ in range(1000):
            x = sampler.draw_shell(g, 1.2, 1.5)
            assert 1.2 <= f_hat(p, x) < 1.5

    def test_zero_heuristic_shell_band(self):
        p = wide_problem(2, half_width=5.0)
        sampler = InformedSampler(p, heuristic="zero")
        g = make_rng(42)
        for _ in range(1000):
            x = sampler.draw_shell(g, 0.8, 1.1)
            d = np.linalg.norm(x - p.start)
            assert 0.8 <= d < 1.1

    def test_shell_rejects_bad_interval(self):
        sampler = InformedSampler(wide_problem(2))
        with pytest.raises(ValueError):
            sampler.draw_shell(make_rng(0), 1.5, 1.2)


def test_uniform_box_determinism():
    bounds = AxisBox([-1.0, 0.0], [2.0, 4.0])
    xa = np.array([sample_uniform_box(make_rng(9), bounds) for _ in range(5)])
    xb = np.array([sample_uniform_box(make_rng(9), bounds) for _ in range(5)])
    assert np.array_equal(xa[0], xb[0])
    assert (xa >= bounds.lower).all() and (xa <= bounds.upper).all()
