import math

import numpy as np
import pytest

from convex_trig.body import ConvexBody

ACCEPTANCE_LINES: list[str] = []


def random_polygon(rng: np.random.Generator, n: int) -> ConvexBody:
    """``n`` points on a circle pushed through a random linear map and a small shift.

    Points on an ellipse are always in strictly convex position; the shift stays
    well inside the image of the unit disc so the origin remains interior.
    """
    ang = np.sort(rng.uniform(0.0, 2 * math.pi, n))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
    while gaps.max() > 0.9 * math.pi or gaps.min() < 1e-3:
        ang = np.sort(rng.uniform(0.0, 2 * math.pi, n))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
    pts = np.column_stack([np.cos(ang), np.sin(ang)])
    A = rng.uniform(-0.5, 0.5, (2, 2)) + np.diag(rng.uniform(0.8, 2.0, 2))
    if np.linalg.det(A) < 0:
        A[:, 0] *= -1
    # translation by at most a fifth of the inradius of the inscribed polygon
    inr = math.cos(gaps.max() / 2) * np.linalg.svd(A, compute_uv=False)[-1]
    shift = rng.uniform(-1, 1, 2) * 0.2 * inr / math.sqrt(2)
    return ConvexBody.polygon(pts @ A.T + shift)


def polygon_area(v) -> float:
    v = np.asarray(v, dtype=float)
    return 0.5 * float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - v[:, 1] * np.roll(v[:, 0], -1)))


def polar_polygon_area(v) -> float:
    """Area of the polar set from the edge normals, solved independently."""
    v = np.asarray(v, dtype=float)
    nxt = np.roll(v, -1, axis=0)
    Q = np.array([np.linalg.solve(np.array([p, r]), np.ones(2)) for p, r in zip(v, nxt)])
    return polygon_area(Q)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def square():
    return ConvexBody.polygon([[1, -1], [1, 1], [-1, 1], [-1, -1]])


@pytest.fixture
def diamond():
    return ConvexBody.polygon([[1, 0], [0, 1], [-1, 0], [0, -1]])


@pytest.fixture
def circle():
    return ConvexBody.ellipse(1.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
