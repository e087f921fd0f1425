import numpy as np
import pytest

from convex_trig.body import ConvexBody
from convex_trig.polygon import build_tables, eval_piecewise, stair, stair_inverse
from conftest import polar_polygon_area, polygon_area, random_polygon


def test_square_tables(square):
    tab = build_tables(square)
    # first vertex after the positive x-ray is (1, 1); hand-computed Theta_k
    assert np.array_equal(tab.vertices, [[1, 1], [-1, 1], [-1, -1], [1, -1]])
    assert np.array_equal(tab.Theta, [1, 3, 5, 7, 9])
    assert np.array_equal(tab.theta_edge, [2, 2, 2, 2])
    assert np.allclose(tab.polar_vertices, [[0, 1], [-1, 0], [0, -1], [1, 0]], atol=0)
    assert tab.period == 8 and tab.polar_period == 4
    assert np.array_equal(tab.polar_lift, [0, 1, 2, 3, 4])
    assert tab.x_hat == 1.0


def test_dual_pairing(rng):
    for _ in range(30):
        tab = build_tables(random_polygon(rng, int(rng.integers(3, 40))))
        P, Q = tab.vertices, tab.polar_vertices
        nxt = np.roll(P, -1, axis=0)
        assert np.max(np.abs(np.sum(Q * P, axis=1) - 1)) < 1e-12
        assert np.max(np.abs(np.sum(Q * nxt, axis=1) - 1)) < 1e-12


def test_periods_are_doubled_areas(rng):
    for _ in range(30):
        body = random_polygon(rng, int(rng.integers(3, 40)))
        tab = build_tables(body)
        assert tab.period == pytest.approx(2 * polygon_area(body.vertices), rel=1e-13)
        assert tab.polar_period == pytest.approx(2 * polar_polygon_area(body.vertices), rel=1e-10)


def test_lift_is_increasing_and_anchored(rng):
    for _ in range(30):
        tab = build_tables(random_polygon(rng, int(rng.integers(3, 40))))
        assert np.all(np.diff(tab.polar_lift) > 0)
        assert tab.polar_lift[-1] - tab.polar_lift[0] == pytest.approx(tab.polar_period, rel=1e-13)


def test_eval_piecewise_on_square(square):
    tab = build_tables(square)
    th = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, -1.0, 17.0])
    expected = [[1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1], [0, -1], [1, -1], [1, 0],
                [1, -1], [1, 1]]
    assert np.allclose(eval_piecewise(tab, th), expected, atol=1e-15)


def test_stair_on_square(square):
    tab = build_tables(square)
    assert stair(tab, 0.5) == (0.0, 0.0)
    assert stair(tab, 1.0) == (0.0, 1.0)
    assert stair(tab, 2.0) == (1.0, 1.0)
    assert stair(tab, 8.0) == (4.0, 4.0)
    assert stair(tab, 9.0) == (4.0, 5.0)
    assert stair(tab, -7.0) == (-4.0, -3.0)


def test_stair_inverse_on_square(square):
    tab = build_tables(square)
    assert stair_inverse(tab, 0.5) == (1.0, 1.0)
    assert stair_inverse(tab, 1.0) == (1.0, 3.0)
    assert stair_inverse(tab, 0.0) == (-1.0, 1.0)
    assert stair_inverse(tab, 4.5) == (9.0, 9.0)


def test_stair_and_inverse_are_mutual(rng):
    for _ in range(10):
        tab = build_tables(random_polygon(rng, int(rng.integers(3, 20))))
        for th in rng.uniform(-2 * tab.period, 2 * tab.period, 20):
            lo, hi = stair(tab, th)
            assert lo == hi
            ilo, ihi = stair_inverse(tab, lo)
            assert ilo <= th + 1e-12 and th <= ihi + 1e-12


def test_non_polygon_rejected():
    with pytest.raises(TypeError):
        build_tables(ConvexBody.ellipse(1, 2))
