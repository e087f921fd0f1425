import math

import numpy as np
import pytest

from convex_trig import geodesics as geo
from convex_trig import pendulum as pd
from convex_trig.body import ConvexBody
from convex_trig.oracle import ode_reference
from conftest import random_polygon

STEPS = 20_000


def _oracle_error(traj, spec, T, steps=STEPS):
    names = geo.STATE_COORDS[spec.system]
    x0 = [traj.state[k][0] for k in names]
    Y = ode_reference(spec.system, traj.control_fn, T, steps, x0=x0,
                      breakpoints=traj.switch_times, sample_times=traj.t)
    S = np.column_stack([traj.state[k] for k in names])
    return float(np.max(np.abs(Y - S)))


def test_heisenberg_circle_closed_form(circle):
    spec = geo.ExtremalSpec("heisenberg", circle, H=1.0, q=2.0)
    tr = geo.heisenberg(spec, math.pi, 101)
    t = tr.t
    assert np.allclose(tr.state["x1"], np.sin(2 * t) / 2, atol=1e-14)
    assert np.allclose(tr.state["x2"], (1 - np.cos(2 * t)) / 2, atol=1e-14)
    assert np.allclose(tr.state["z"], (2 * t - np.sin(2 * t)) / 8, atol=1e-14)
    assert tr.meta["conjugate_time"] == pytest.approx(math.pi, rel=1e-15)


def test_heisenberg_square_hand_values(square):
    spec = geo.ExtremalSpec("heisenberg", square, H=1.0, q=1.0)
    tr = geo.heisenberg(spec, 4.0, 5)
    assert np.allclose(tr.state["x1"], [0, 1, 0, -1, 0], atol=1e-15)
    assert np.allclose(tr.state["x2"], [0, 1, 2, 1, 0], atol=1e-15)
    assert np.allclose(tr.state["z"], [0, 0, 1, 2, 2], atol=1e-15)
    assert geo.heisenberg_conjugate_time(spec) == 4.0
    assert tr.switch_times == [1.0, 2.0, 3.0]


def test_heisenberg_with_offset_matches_oracle(rng, square):
    spec = geo.ExtremalSpec("heisenberg", square, H=1.3, q=-0.7, theta_polar_0=0.4,
                            x0=(0.5, -1.0, 2.0))
    T = 2 * math.pi * 1.3 / 0.7
    tr = geo.heisenberg(spec, T, 301)
    assert _oracle_error(tr, spec, T) < 1e-9


def test_heisenberg_q_zero(square, circle):
    rep = geo.heisenberg(geo.ExtremalSpec("heisenberg", square, q=0.0), 1.0)
    assert isinstance(rep, geo.SingularReport)
    assert rep.edge == ((1.0, -1.0), (1.0, 1.0)) and rep.control_range == (-1.0, 1.0)
    line = geo.heisenberg(geo.ExtremalSpec("heisenberg", circle, q=0.0, theta_polar_0=0.3), 2.0, 3)
    assert np.allclose(line.state["x1"], [0, math.cos(0.3), 2 * math.cos(0.3)], atol=1e-15)


def test_grushin_matches_oracle(rng):
    body = random_polygon(rng, 8)
    spec = geo.ExtremalSpec("grushin", body, H=0.8, q=1.6, theta_polar_0=0.2, x0=(0.0, 0.3))
    T = 2 * math.pi * 0.8 / 1.6
    tr = geo.grushin(spec, T, 201)
    assert tr.state["x2"][0] == pytest.approx(0.3, abs=1e-15)
    assert _oracle_error(tr, spec, T) < 1e-9


def test_grushin_circle_closed_form(circle):
    tr = geo.grushin(geo.ExtremalSpec("grushin", circle, H=1.0, q=1.0), 2.0, 21)
    t = tr.t
    assert np.allclose(tr.state["x1"], np.sin(t), atol=1e-14)
    assert np.allclose(tr.state["x2"], 0.5 * (t - np.cos(t) * np.sin(t)), atol=1e-14)


@pytest.mark.parametrize("system", ["martinet", "engel", "cartan"])
def test_pendulum_systems_on_polygons(rng, system):
    body = random_polygon(rng, 7)
    spec = geo.ExtremalSpec(system, body, H=1.0, q=0.8, phi0=0.4, theta_polar_0=0.3, omega0=0.5,
                            policy=pd.StayForever())
    tr = geo.extremal(spec, 6.0, 301)
    assert tr.meta["exact"]
    assert _oracle_error(tr, spec, 6.0) < 1e-9
    cas = geo.casimirs(tr, body)
    assert cas.H_drift < 1e-12
    assert cas.C_drift < 1e-12


def test_cartan_on_ellipse_matches_oracle():
    body = ConvexBody.ellipse(1.0, 2.0)
    spec = geo.ExtremalSpec("cartan", body, H=1.0, q=1.0, theta_polar_0=0.1, omega0=0.4)
    tr = geo.extremal(spec, 5.0, 201)
    assert not tr.meta["exact"]
    assert _oracle_error(tr, spec, 5.0) < 1e-7
    assert geo.casimirs(tr, body).C_drift < 1e-8


def test_martinet_forces_x2(square):
    spec = geo.ExtremalSpec("martinet", square, H=2.0, q=0.5, theta_polar_0=2.0, omega0=0.25)
    tr = geo.extremal(spec, 1.0, 11)
    assert tr.state["x2"][0] == pytest.approx(2.0 * 0.25 / 0.5)
    # h3 = q x2 along the whole arc
    assert np.allclose(tr.h3, 0.5 * tr.state["x2"], atol=1e-12)


def test_normalization():
    sq = ConvexBody.polygon([[1, -1], [1, 1], [-1, 1], [-1, -1]])
    phi, qn, h4, h5 = geo.normalization(geo.ExtremalSpec("cartan", sq, q=-2.0, phi0=0.3))
    assert phi == pytest.approx(0.3 + math.pi) and qn == 2.0
    assert h4 == pytest.approx(2.0 * math.sin(0.3)) and h5 == pytest.approx(-2.0 * math.cos(0.3))
    assert geo.normalization(geo.ExtremalSpec("engel", sq, q=-1.0)) == (math.pi, 1.0, 0.0, -1.0)


def test_singular_reports(square):
    rep = geo.extremal(geo.ExtremalSpec("cartan", square, H=0.0, q=1.0), 1.0)
    assert isinstance(rep, geo.SingularReport)
    assert rep.controls == ((-1.0, 0.0), (1.0, 0.0))
    rep = geo.extremal(geo.ExtremalSpec("engel", square, H=1.0, q=0.0, theta_polar_0=1.0), 1.0)
    assert isinstance(rep, geo.SingularReport)
    assert rep.edge == ((1.0, 1.0), (-1.0, 1.0))


def test_negative_H_rejected(square):
    with pytest.raises(ValueError):
        geo.extremal(geo.ExtremalSpec("cartan", square, H=-1.0, q=1.0), 1.0)
    with pytest.raises(ValueError):
        geo.extremal(geo.ExtremalSpec("heisenberg", square, H=0.0, q=1.0), 1.0)


def test_piecewise_polynomial_arcs(rng):
    body = random_polygon(rng, 6)
    spec = geo.ExtremalSpec("cartan", body, H=1.0, q=1.0, theta_polar_0=0.1, omega0=1.7)
    tr = geo.extremal(spec, 8.0, 4001)
    cuts = [0.0, *tr.switch_times, 8.0]
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = (tr.t > a + 1e-9) & (tr.t < b - 1e-9)
        if m.sum() < 6:
            continue
        assert np.all(tr.u[m] == tr.u[m][0])
        for k in geo.STATE_COORDS["cartan"]:
            fit = np.polynomial.Polynomial.fit(tr.t[m], tr.state[k][m], 3)
            assert np.max(np.abs(fit(tr.t[m]) - tr.state[k][m])) < 1e-9


def test_spec_dict_round_trip(square):
    spec = geo.ExtremalSpec("engel", square, H=2.0, q=0.5, x0=(1, 2, 3, 4))
    again = geo.ExtremalSpec.from_dict(spec.to_dict(), square)
    assert again.to_dict() == spec.to_dict()
    with pytest.raises(ValueError):
        geo.ExtremalSpec("heisenberg", square, x0=(1.0, 2.0))
    with pytest.raises(ValueError):
        geo.ExtremalSpec("bogus", square)
