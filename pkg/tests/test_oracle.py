import ast
import math
from pathlib import Path

import numpy as np
import pytest

from convex_trig import oracle
from convex_trig.body import ConvexBody
from conftest import random_polygon

CFG = oracle.OracleConfig(boundary_samples=200_000)


def test_sector_examples(square, circle):
    assert oracle.sector_theta(square, (1.0, 1.0), CFG) == pytest.approx(1.0, abs=1e-12)
    assert oracle.sector_theta(square, (-1.0, 0.0), CFG) == pytest.approx(4.0, abs=1e-12)
    assert oracle.sector_theta(circle, (0.0, 1.0), CFG) == pytest.approx(math.pi / 2, abs=1e-9)


def test_sector_rejects_interior_points(square):
    with pytest.raises(ValueError):
        oracle.sector_theta(square, (0.5, 0.5), CFG)


def test_sector_on_radial_body():
    r = ConvexBody.radial(np.full(8, 2.0))
    # the octagon through the samples: the sector up to the second sample is two triangles
    tri = 2.0 * 2.0 * math.sin(2 * math.pi / 8)
    P = (2.0 * math.cos(math.pi / 2), 2.0 * math.sin(math.pi / 2))
    assert oracle.sector_theta(r, P, CFG) == pytest.approx(2 * tri, rel=1e-9)


def test_oracle_config_validation():
    with pytest.raises(ValueError):
        oracle.OracleConfig(boundary_samples=0)


def test_zero_control_keeps_state():
    ts, ys = oracle.ode_reference("cartan", lambda t: np.zeros((len(t), 2)), 1.0, 100,
                                  x0=[1, 2, 3, 4, 5])
    assert np.all(ys == [1, 2, 3, 4, 5])


def test_grushin_drift():
    ctrl = lambda t: np.tile([1.0, 0.0], (len(t), 1))  # noqa: E731
    Y = oracle.ode_reference("grushin", ctrl, 2.0, 50, x0=[0.5, 0.25], sample_times=[0.0, 1.3, 2.0])
    assert np.allclose(Y, [[0.5, 0.25], [1.8, 0.25], [2.5, 0.25]], atol=1e-14)


def test_heisenberg_circle_accuracy():
    ctrl = lambda t: np.column_stack([np.cos(t), np.sin(t)])  # noqa: E731
    ts, ys = oracle.ode_reference("heisenberg", ctrl, 2 * math.pi, 10_000)
    exact = np.array([0.0, 0.0, math.pi])
    assert np.max(np.abs(ys[-1] - exact)) < 1e-12


def test_breakpoints_are_respected():
    # a control that jumps at t = 0.3 is integrated exactly when the jump is declared
    ctrl = lambda t: np.where((np.asarray(t) < 0.3)[:, None], [1.0, 0.0], [0.0, 1.0])  # noqa: E731
    Y = oracle.ode_reference("heisenberg", ctrl, 1.0, 7, breakpoints=[0.3], sample_times=[1.0])
    assert np.allclose(Y[0], [0.3, 0.7, 0.5 * 0.3 * 0.7], atol=1e-14)


def test_state_dimensions():
    with pytest.raises(ValueError):
        oracle.ode_reference("engel", lambda t: np.zeros((len(t), 2)), 1.0, 10, x0=[0, 0, 0])
    with pytest.raises(ValueError):
        oracle.state_rhs("nope", [0, 0], [0, 0])


def test_oracle_does_not_import_checked_modules():
    tree = ast.parse(Path(oracle.__file__).read_text())
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.update(a.name for a in node.names)
            imported.add(node.module or "")
        elif isinstance(node, ast.Import):
            imported.update(a.name for a in node.names)
    assert not imported & {"trig", "polygon", "pendulum", "geodesics"}


def test_sector_increments_are_triangle_areas(rng):
    body = random_polygon(rng, 9)
    v = body.vertices
    ang = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2 * math.pi)
    order = np.argsort(ang)
    vals = [oracle.sector_theta(body, v[k], CFG) for k in order]
    for (a, b), (ta, tb) in zip(zip(order[:-1], order[1:]), zip(vals[:-1], vals[1:])):
        cross = v[a, 0] * v[b, 1] - v[a, 1] * v[b, 0]
        assert tb - ta == pytest.approx(cross, abs=1e-9)
