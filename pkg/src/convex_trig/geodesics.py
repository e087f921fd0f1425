"""Extremals of the time-optimal sub-Finsler problems with control set ``Omega``.

State equations (``u`` ranges over ``Omega``):

* heisenberg: ``x' = u``, ``z' = (x1 u2 - x2 u1) / 2``
* grushin:    ``x1' = u1``, ``x2' = x1 u2``
* martinet:   ``x' = u``, ``w' = -x2**2 u1 / 2``
* engel:      heisenberg plus ``w' = -x2**2 u1 / 2``
* cartan:     heisenberg plus ``w1' = x1**2 u2 / 2``, ``w2' = -x2**2 u1 / 2``

Along a normal extremal the adjoint ``(h1, h2)`` moves on ``H dOmega°`` and the
control is the matched point of ``dOmega``.  Heisenberg and Grushin have closed
forms in ``cos°`` and ``sin°``; the other three are driven by the generalized
pendulum ``theta°'' = (q/H) sin_Omega theta`` with ``h3 = H theta°'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import pendulum as pd
from . import trig
from .body import ConvexBody, area, polar, require_valid, support
from .config import DEFAULT_TOL, Tolerances

SYSTEMS = ("heisenberg", "grushin", "martinet", "engel", "cartan")
STATE_COORDS = {
    "heisenberg": ("x1", "x2", "z"),
    "grushin": ("x1", "x2"),
    "martinet": ("x1", "x2", "w"),
    "engel": ("x1", "x2", "z", "w"),
    "cartan": ("x1", "x2", "z", "w1", "w2"),
}
PENDULUM_SYSTEMS = ("martinet", "engel", "cartan")
Q_ZERO = 1e-8  # |q| below Q_ZERO * H counts as q = 0


@dataclass(frozen=True)
class ExtremalSpec:
    """Initial data of an extremal.

    ``q`` is the vertical adjoint (``p2`` for Grushin, ``sqrt(h4**2 + h5**2)``
    for Cartan).  ``theta_polar_0`` and ``omega0`` are given in the normalized
    frame, i.e. after rotating by ``-phi0`` (Cartan) or by ``pi`` for Martinet
    and Engel with ``q < 0``.
    """

    system: str
    body: ConvexBody
    H: float = 1.0
    q: float = 0.0
    phi0: float = 0.0
    theta_polar_0: float = 0.0
    omega0: float = 0.0
    x0: tuple | None = None
    policy: object = None

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system {self.system!r}; expected one of {SYSTEMS}")
        if self.x0 is not None and len(self.x0) != len(STATE_COORDS[self.system]):
            raise ValueError(f"{self.system} needs {len(STATE_COORDS[self.system])} initial coordinates")

    @property
    def initial_state(self) -> np.ndarray:
        n = len(STATE_COORDS[self.system])
        return np.zeros(n) if self.x0 is None else np.asarray(self.x0, dtype=float)

    @classmethod
    def from_dict(cls, d: dict, body: ConvexBody) -> "ExtremalSpec":
        keys = ("system", "H", "q", "phi0", "theta_polar_0", "omega0", "x0")
        kw = {k: d[k] for k in keys if k in d}
        if "x0" in kw and kw["x0"] is not None:
            kw["x0"] = tuple(float(v) for v in kw["x0"])
        for k in ("H", "q", "phi0", "theta_polar_0", "omega0"):
            if k in kw:
                kw[k] = float(kw[k])
        return cls(body=body, **kw)

    def to_dict(self) -> dict:
        return {"system": self.system, "H": self.H, "q": self.q, "phi0": self.phi0,
                "theta_polar_0": self.theta_polar_0, "omega0": self.omega0,
                "x0": None if self.x0 is None else list(self.x0)}


@dataclass
class ExtremalTrajectory:
    system: str
    t: np.ndarray
    state: dict
    u: np.ndarray
    h: np.ndarray
    H: float
    theta_polar: np.ndarray
    h3: np.ndarray | None = None
    C: np.ndarray | None = None
    h4: float = 0.0
    h5: float = 0.0
    switch_times: list = field(default_factory=list)
    control_fn: object = None
    meta: dict = field(default_factory=dict)

    def columns(self) -> list[tuple[str, np.ndarray]]:
        """CSV columns ``t, x1, x2, [z], [w|w1,w2], u1, u2, h1, h2, [h3], H, [C]``."""
        cols = [("t", self.t)]
        cols += [(k, self.state[k]) for k in STATE_COORDS[self.system]]
        cols += [("u1", self.u[:, 0]), ("u2", self.u[:, 1]), ("h1", self.h[:, 0]), ("h2", self.h[:, 1])]
        if self.h3 is not None:
            cols.append(("h3", self.h3))
        cols.append(("H", np.full(len(self.t), self.H)))
        if self.C is not None:
            cols.append(("C", self.C))
        return cols


@dataclass(frozen=True)
class SingularReport:
    """A configuration where the maximum principle does not fix the control."""

    system: str
    reason: str
    edge: tuple | None = None
    control_range: tuple | None = None
    covector: tuple | None = None
    orthogonal_to: tuple | None = None
    controls: tuple | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def _check_H(spec: ExtremalSpec):
    require_valid(spec.body)
    if not spec.H > 0:
        raise ValueError(f"H must be positive, got {spec.H}")


def _rot(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    if phi == math.pi:
        c, s = -1.0, 0.0
    return np.array([[c, -s], [s, c]])


def _corner_report(spec: ExtremalSpec, body: ConvexBody, theta_polar: float, reason: str,
                   tol: Tolerances = DEFAULT_TOL):
    """Report the edge of ``body`` dual to the polar corner at ``theta_polar`` (None if smooth)."""
    c = trig.inverse_correspondence(body, theta_polar)
    if not c.is_corner(tol):
        return None
    E = trig.cos_sin(body, np.array([c.lo, c.hi]))
    Q = trig.cos_sin(polar(body), theta_polar)
    Qp = np.array([-Q[1], Q[0]])
    v = E @ Qp
    return SingularReport(
        spec.system, reason,
        edge=(tuple(map(float, E[0])), tuple(map(float, E[1]))),
        control_range=(float(v[0]), float(v[1])),
        covector=tuple(map(float, Q)),
        detail="control u(v) = (Q + v Q_perp) / |Q|^2 on the edge, v in control_range")


def detect_singular(spec: ExtremalSpec, tol: Tolerances = DEFAULT_TOL):
    """Return a :class:`SingularReport` for singular configurations, else ``None``."""
    if spec.system in ("heisenberg", "grushin"):
        if spec.H > 0 and abs(spec.q) < Q_ZERO * spec.H:
            return _corner_report(spec, spec.body, spec.theta_polar_0,
                                  "vertical adjoint vanishes at a corner of the polar set", tol)
        return None
    if spec.H == 0:
        rep = dict(system=spec.system, reason="H = 0: abnormal extremal")
        if spec.system == "cartan":
            h45 = (-spec.q * math.sin(spec.phi0), spec.q * math.cos(spec.phi0))
            d = np.array([[-h45[1], h45[0]], [h45[1], -h45[0]]])
            if np.any(d):
                pts = d / np.asarray(trig.gauge(spec.body, d))[:, None]
                rep["controls"] = tuple(tuple(map(float, p)) for p in pts)
            rep["orthogonal_to"] = tuple(map(float, h45))
            rep["detail"] = "controls satisfy (u1, u2) orthogonal to (h4, h5) for all t"
        return SingularReport(**rep)
    if spec.H > 0 and spec.q == 0 and spec.omega0 == 0:
        phi = normalization(spec)[0]
        frame = trig.rotate(spec.body, -phi) if phi else spec.body
        rep = _corner_report(spec, frame, spec.theta_polar_0,
                             "h3 vanishes identically at a corner of the polar set", tol)
        if rep is not None and phi:
            R = _rot(phi)
            edge = tuple(tuple(map(float, R @ np.asarray(e))) for e in rep.edge)
            rep = SingularReport(rep.system, rep.reason, edge, rep.control_range,
                                 tuple(map(float, R @ np.asarray(rep.covector))), detail=rep.detail)
        return rep
    return None


# -- exact state quadrature for piecewise-constant controls --------------------------

def _advance(system: str, y: np.ndarray, u, tau: float) -> np.ndarray:
    """State after ``tau`` with constant control ``u`` (closed-form polynomial arcs)."""
    u1, u2 = float(u[0]), float(u[1])
    x1, x2 = y[0], y[1]
    out = y.copy()
    if system == "grushin":
        out[0] = x1 + u1 * tau
        out[1] = y[1] + u2 * (x1 * tau + 0.5 * u1 * tau * tau)
        return out
    out[0] = x1 + u1 * tau
    out[1] = x2 + u2 * tau
    t2, t3 = tau * tau, tau ** 3 / 3.0
    w = -0.5 * u1 * (x2 * x2 * tau + x2 * u2 * t2 + u2 * u2 * t3)
    if system == "heisenberg":
        out[2] += 0.5 * (x1 * u2 - x2 * u1) * tau
    elif system == "martinet":
        out[2] += w
    elif system == "engel":
        out[2] += 0.5 * (x1 * u2 - x2 * u1) * tau
        out[3] += w
    else:
        out[2] += 0.5 * (x1 * u2 - x2 * u1) * tau
        out[3] += 0.5 * u2 * (x1 * x1 * tau + x1 * u1 * t2 + u1 * u1 * t3)
        out[4] += w
    return out


def _rhs_state(system: str, y, u):
    x1, x2 = y[0], y[1]
    u1, u2 = u
    if system == "grushin":
        return [u1, x1 * u2]
    zd = 0.5 * (x1 * u2 - x2 * u1)
    wd = -0.5 * x2 * x2 * u1
    if system == "heisenberg":
        return [u1, u2, zd]
    if system == "martinet":
        return [u1, u2, wd]
    if system == "engel":
        return [u1, u2, zd, wd]
    return [u1, u2, zd, 0.5 * x1 * x1 * u2, wd]


def integrate_piecewise(system: str, pieces, y0, times) -> np.ndarray:
    """States at ``times`` for controls constant on ``pieces = [(t0, t1, u), ...]``."""
    starts = np.array([p[0] for p in pieces])
    ys = [np.asarray(y0, dtype=float)]
    for (t0, t1, u), nxt in zip(pieces[:-1], pieces[1:]):
        ys.append(_advance(system, ys[-1], u, nxt[0] - t0))
    idx = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(pieces) - 1)
    out = np.empty((len(times), len(y0)))
    for i, (k, t) in enumerate(zip(idx, times)):
        out[i] = _advance(system, ys[k], pieces[k][2], t - pieces[k][0])
    return out


def _linear_pieces(body: ConvexBody, slope: float, th0: float, T: float, rot=None):
    """Control pieces while ``theta°`` moves uniformly: ``theta° = th0 + slope t``."""
    if slope == 0.0:
        u = pd.control_of_polar(body, th0)
        return [(0.0, T, u if rot is None else rot @ u)], []
    crossings = pd.polar_breaks(body, th0, th0 + slope * T)
    ts = np.concatenate([[0.0], (crossings - th0) / slope, [T]])
    pieces = []
    for a, b in zip(ts[:-1], ts[1:]):
        u = pd.control_of_polar(body, th0 + slope * 0.5 * (a + b))
        pieces.append((float(a), float(b), u if rot is None else rot @ u))
    return pieces, [float(x) for x in ts[1:-1]]


def _state_dict(system, Y):
    return {k: Y[:, i] for i, k in enumerate(STATE_COORDS[system])}


# -- Heisenberg and Grushin -------------------------------------------------------------

def heisenberg(spec: ExtremalSpec, T: float, n_samples: int = 1001):
    """Closed-form Heisenberg extremal; a :class:`SingularReport` at a polar corner with ``q = 0``."""
    _check_H(spec)
    body, H, q = spec.body, spec.H, spec.q
    Pb = polar(body)
    t = np.linspace(0.0, T, n_samples)
    y0 = spec.initial_state
    th0 = spec.theta_polar_0
    if abs(q) < Q_ZERO * H:
        rep = detect_singular(spec)
        if rep is not None:
            return rep
        u0 = pd.control_of_polar(body, th0)
        tp = np.full_like(t, th0)
        x1 = y0[0] + t * u0[0]
        x2 = y0[1] + t * u0[1]
        z = y0[2] + 0.5 * (y0[0] * u0[1] - y0[1] * u0[0]) * t
        switch = []
        slope = 0.0
    else:
        slope = q / H
        tp = slope * t + th0
        cs = trig.cos_sin(Pb, tp)
        c0 = trig.cos_sin(Pb, th0)
        k = H / q
        xt1 = k * (cs[:, 1] - c0[1])
        xt2 = -k * (cs[:, 0] - c0[0])
        zt = 0.5 * k * k * (tp - th0 + cs[:, 0] * c0[1] - cs[:, 1] * c0[0])
        x1 = y0[0] + xt1
        x2 = y0[1] + xt2
        # left translation by the initial point
        z = y0[2] + zt + 0.5 * (y0[0] * xt2 - y0[1] * xt1)
        switch = [float(s) for s in (pd.polar_breaks(body, th0, th0 + slope * T) - th0) / slope]
    u = pd.control_of_polar(body, tp)
    h = H * trig.cos_sin(Pb, tp)
    return ExtremalTrajectory(
        "heisenberg", t, {"x1": x1, "x2": x2, "z": z}, u, h, H, tp,
        h3=np.full_like(t, q), switch_times=switch,
        control_fn=lambda s: pd.control_of_polar(body, slope * np.asarray(s) + th0),
        meta={"conjugate_time": heisenberg_conjugate_time(spec)})


def heisenberg_conjugate_time(spec: ExtremalSpec) -> float | None:
    """First conjugate time ``2 H S(Omega°) / |q|`` (``None`` when ``q = 0``)."""
    if spec.q == 0:
        return None
    return 2.0 * spec.H * area(polar(spec.body)) / abs(spec.q)


def grushin(spec: ExtremalSpec, T: float, n_samples: int = 1001):
    """Closed-form Grushin extremal.  ``x1(0) = (H/p2) sin° theta°_0`` is forced by the adjoint."""
    _check_H(spec)
    body, H, p2 = spec.body, spec.H, spec.q
    Pb = polar(body)
    t = np.linspace(0.0, T, n_samples)
    y0 = spec.initial_state
    th0 = spec.theta_polar_0
    if abs(p2) < Q_ZERO * H:
        rep = detect_singular(spec)
        if rep is not None:
            return rep
        u0 = pd.control_of_polar(body, th0)
        tp = np.full_like(t, th0)
        x1 = y0[0] + t * u0[0]
        x2 = y0[1] + t * u0[1]
        switch, slope = [], 0.0
    else:
        slope = p2 / H
        tp = slope * t + th0
        cs = trig.cos_sin(Pb, tp)
        c0 = trig.cos_sin(Pb, th0)
        k = H / p2
        x1 = k * cs[:, 1]

        def G(a, c):
            return a - c[..., 0] * c[..., 1]
        x2 = y0[1] + 0.5 * k * k * (G(tp, cs) - G(th0, c0))
        switch = [float(s) for s in (pd.polar_breaks(body, th0, th0 + slope * T) - th0) / slope]
    u = pd.control_of_polar(body, tp)
    h = H * trig.cos_sin(Pb, tp)
    return ExtremalTrajectory(
        "grushin", t, {"x1": x1, "x2": x2}, u, h, H, tp, switch_times=switch,
        control_fn=lambda s: pd.control_of_polar(body, slope * np.asarray(s) + th0),
        meta={"x1_0": float(x1[0])})


# -- pendulum-driven systems ---------------------------------------------------------------

def normalization(spec: ExtremalSpec) -> tuple[float, float, float, float]:
    """``(phi, q_n, h4, h5)``: frame rotation, normalized ``q >= 0`` and the constant adjoints."""
    if spec.system == "cartan":
        phi, qn = float(spec.phi0), float(spec.q)
        if qn < 0:
            phi, qn = phi + math.pi, -qn
        return phi, qn, -qn * math.sin(phi), qn * math.cos(phi)
    if spec.q >= 0:
        return 0.0, float(spec.q), 0.0, float(spec.q)
    return math.pi, -float(spec.q), 0.0, float(spec.q)


def pendulum_extremal(spec: ExtremalSpec, T: float, n_samples: int = 1001,
                      tol: Tolerances = DEFAULT_TOL):
    """Martinet, Engel or Cartan extremal driven by the generalized pendulum."""
    if spec.system not in PENDULUM_SYSTEMS:
        raise ValueError(f"{spec.system} is not a pendulum-driven system")
    require_valid(spec.body)
    if spec.H < 0:
        raise ValueError(f"H must be non-negative, got {spec.H}")
    rep = detect_singular(spec, tol)
    if rep is not None:
        return rep
    H = spec.H
    phi, qn, h4, h5 = normalization(spec)
    R = _rot(phi)
    frame = trig.rotate(spec.body, -phi) if phi else spec.body
    t = np.linspace(0.0, T, n_samples)
    y0 = spec.initial_state.copy()
    th0, w0 = spec.theta_polar_0, spec.omega0
    if spec.system == "martinet" and spec.q != 0:
        # h3 = q x2 ties x2 to the pendulum velocity
        y0[1] = H * w0 / spec.q
    gain = qn / H

    if qn == 0.0 or frame.kind != "ellipse":
        if qn == 0.0:
            pieces, switch = _linear_pieces(frame, w0, th0, T, R)
            tp = th0 + w0 * t
            om = np.full_like(t, w0)

            def control_fn(s, _w=w0):
                return pd.control_of_polar(frame, th0 + _w * np.asarray(s)) @ R.T
        else:
            tr = pd.simulate(frame, pd.PendulumState(th0, w0), T, spec.policy, gain=gain,
                             times=t, tol=tol)
            pieces = [(s.t0, s.t1, R @ np.asarray(s.u)) for s in tr.segments]
            switch = sorted({p[0] for p in pieces[1:]})
            tp, om = tr.theta_polar, tr.omega

            def control_fn(s, _segs=tr.segments):
                return pd._eval_segments(_segs, np.atleast_1d(np.asarray(s, dtype=float)))[2] @ R.T
        Y = integrate_piecewise(spec.system, pieces, y0, t)
        u = control_fn(t)
        exact = True
    else:
        a, b = frame.a, frame.b
        ab = a * b

        def ctrl(x):
            s = x * ab
            return R @ np.array([a * math.cos(s), b * math.sin(s)])

        def rhs(_, y):
            u_ = ctrl(y[0])
            return [y[1], gain * b * math.sin(y[0] * ab), *_rhs_state(spec.system, y[2:], u_)]
        sol = integrate.solve_ivp(rhs, (0.0, T), [th0, w0, *y0], method="RK45",
                                  rtol=tol.ode_rtol * 1e-1, atol=tol.ode_atol,
                                  dense_output=True, t_eval=t)
        if sol.status < 0:
            raise pd.IntegrationError(sol.message, pd.PendulumState(sol.y[0, -1], sol.y[1, -1], sol.t[-1]))
        tp, om = sol.y[0], sol.y[1]
        Y = sol.y[2:].T
        u = pd.control_of_polar(frame, tp) @ R.T
        switch = []

        def control_fn(s, _sol=sol.sol):
            return pd.control_of_polar(frame, _sol(np.asarray(s, dtype=float))[0]) @ R.T
        exact = False
    h = H * (trig.cos_sin(polar(frame), tp) @ R.T)
    h3 = H * om
    C = 0.5 * h3 ** 2 + h5 * h[:, 0] - h4 * h[:, 1]
    return ExtremalTrajectory(spec.system, t, _state_dict(spec.system, Y), u, h, H, tp,
                              h3=h3, C=C, h4=h4, h5=h5, switch_times=list(switch),
                              control_fn=control_fn,
                              meta={"phi": phi, "q_normalized": qn, "exact": exact,
                                    "x0": y0.tolist()})


def extremal(spec: ExtremalSpec, T: float, n_samples: int = 1001):
    """Dispatch on ``spec.system``."""
    if spec.system == "heisenberg":
        return heisenberg(spec, T, n_samples)
    if spec.system == "grushin":
        return grushin(spec, T, n_samples)
    return pendulum_extremal(spec, T, n_samples)


# -- diagnostics ----------------------------------------------------------------------------

@dataclass(frozen=True)
class CasimirReport:
    H: np.ndarray
    C: np.ndarray | None
    h4: float
    h5: float
    H_drift: float
    C_drift: float | None
    energy: np.ndarray | None

    def as_dict(self) -> dict:
        return {"H_drift": self.H_drift, "C_drift": self.C_drift, "h4": self.h4, "h5": self.h5}


def casimirs(traj: ExtremalTrajectory, body: ConvexBody) -> CasimirReport:
    """Conserved quantities along ``traj``: ``H = s_Omega(h)``, ``C`` and ``C / H``."""
    Hs = np.asarray(support(body, traj.h))
    Hd = float(np.max(np.abs(Hs - traj.H)))
    if traj.C is None:
        return CasimirReport(Hs, None, traj.h4, traj.h5, Hd, None, None)
    Cd = float(np.max(np.abs(traj.C - traj.C[0])))
    return CasimirReport(Hs, traj.C, traj.h4, traj.h5, Hd, Cd, traj.C / traj.H)
