"""Generalized trigonometric functions of a convex body.

``cos_Omega`` and ``sin_Omega`` are the coordinates of the boundary point
``P_theta`` whose sector, swept counter-clockwise from the positive x-ray, has
doubled area ``theta``.  The period is ``2 S(Omega)``.

Each body kind is served by an engine:

* polygons use the exact tables of :mod:`convex_trig.polygon`;
* ellipses use the closed forms ``(a cos(theta/ab), b sin(theta/ab))``;
* radial bodies are the polygon through their samples, so they reuse the
  polygon tables; the polar angle of a chord normal is looked up on the
  resampled polar body, which makes the correspondence grid-limited.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from . import polygon as pg
from .body import ConvexBody, _cross, phi_grid, polar, require_valid
from .config import DEFAULT_RADIAL_SAMPLES, DEFAULT_TOL, Tolerances

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AngleCorrespondence:
    """Closed interval ``[lo, hi]`` of angles matched to a given angle."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def is_corner(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self.width > tol.corner

    def endpoints(self) -> tuple[float, float]:
        return self.lo, self.hi


@dataclass(frozen=True)
class DerivativePair:
    """One-sided derivatives of ``(cos_Omega, sin_Omega)``."""

    left: tuple[float, float]
    right: tuple[float, float]

    def is_smooth(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(np.subtract(self.left, self.right))) <= tol)


# -- engines -------------------------------------------------------------------

class _Engine:
    period: float

    def cos_sin(self, theta) -> np.ndarray:
        raise NotImplementedError

    def gauge(self, X) -> np.ndarray:
        raise NotImplementedError

    def theta_principal(self, X) -> np.ndarray:
        raise NotImplementedError

    def normals(self, theta: float):
        """Outward unit-support covectors before and after ``P_theta``."""
        raise NotImplementedError

    def corr(self, theta: float) -> tuple[float, float]:
        raise NotImplementedError

    def corr_inv(self, theta_polar: float) -> tuple[float, float]:
        raise NotImplementedError


def _wrap(theta, period):
    t = np.asarray(theta, dtype=float)
    r = t - period * np.floor(t / period)
    return np.where(r >= period, r - period, r)


class _PolygonEngine(_Engine):
    def __init__(self, tables: pg.PolygonTables):
        self.t = tables
        self.period = tables.period

    def cos_sin(self, theta):
        return pg.eval_piecewise(self.t, theta)

    def gauge(self, X):
        X = np.asarray(X, dtype=float)
        return (X @ self.t.polar_vertices.T).max(axis=-1)

    def _cell(self, X):
        return np.argmax(np.asarray(X, dtype=float) @ self.t.polar_vertices.T, axis=-1)

    def theta_principal(self, X):
        X = np.asarray(X, dtype=float)
        k = self._cell(X)
        r = self.gauge(X)
        P = X / r[..., None]
        th = self.t.Theta[k] + _cross(self.t.vertices[k], P)
        return _wrap(th, self.period)

    def normals(self, theta):
        _, lo, hi = pg.incident_edges(self.t, theta)
        Q = self.t.polar_vertices
        return Q[lo % self.t.n], Q[hi % self.t.n]

    def corr(self, theta):
        return pg.stair(self.t, theta)

    def corr_inv(self, theta_polar):
        return pg.stair_inverse(self.t, theta_polar)


class _EllipseEngine(_Engine):
    def __init__(self, a: float, b: float):
        self.a, self.b = a, b
        self.ab = a * b
        self.period = TWO_PI * self.ab

    def cos_sin(self, theta):
        s = np.asarray(theta, dtype=float) / self.ab
        return np.stack([self.a * np.cos(s), self.b * np.sin(s)], axis=-1)

    def gauge(self, X):
        X = np.asarray(X, dtype=float)
        return np.hypot(X[..., 0] / self.a, X[..., 1] / self.b)

    def theta_principal(self, X):
        X = np.asarray(X, dtype=float)
        s = np.arctan2(X[..., 1] / self.b, X[..., 0] / self.a)
        return _wrap(self.ab * s, self.period)

    def normals(self, theta):
        s = float(theta) / self.ab
        n = np.array([math.cos(s) / self.a, math.sin(s) / self.b])
        return n, n

    def corr(self, theta):
        v = float(theta) / self.ab ** 2
        return v, v

    def corr_inv(self, theta_polar):
        v = float(theta_polar) * self.ab ** 2
        return v, v


class _RadialEngine(_PolygonEngine):
    """Chord polygon through the samples; polar angles via the resampled polar body."""

    def __init__(self, body: ConvexBody):
        super().__init__(pg.tables_from_points(body.boundary_points))
        self.body = body
        self.N = len(body.samples)
        self.h = TWO_PI / self.N

    def _cell(self, X):
        X = np.asarray(X, dtype=float)
        phi = np.mod(np.arctan2(X[..., 1], X[..., 0]), TWO_PI)
        return np.floor(phi / self.h).astype(int) % self.N

    def gauge(self, X):
        X = np.asarray(X, dtype=float)
        Q = self.t.polar_vertices[self._cell(X)]
        return np.sum(Q * X, axis=-1)

    def _to_angles(self, theta, n_lo, n_hi, target: "_Engine"):
        """Angles on ``target`` of covectors lifted next to the direction of ``theta``."""
        phi = float(pi_omega_engine(self, theta))
        out = []
        for n in (n_lo, n_hi):
            psi0 = math.atan2(n[1], n[0])
            psi = psi0 + TWO_PI * round((phi - psi0) / TWO_PI)
            out.append(float(pi_inv_engine(target, psi)))
        lo, hi = out
        if hi < lo:
            hi = lo
        return lo, hi

    def corr(self, theta):
        lo, hi = self.normals(theta)
        return self._to_angles(theta, lo, hi, engine(polar(self.body)))

    def corr_inv(self, theta_polar):
        pe = engine(polar(self.body))
        lo, hi = pe.normals(theta_polar)
        return pe._to_angles(theta_polar, lo, hi, self)


_ENGINES: "weakref.WeakKeyDictionary[ConvexBody, _Engine]" = weakref.WeakKeyDictionary()


def engine(body: ConvexBody) -> _Engine:
    eng = _ENGINES.get(body)
    if eng is None:
        require_valid(body)
        if body.kind == "polygon":
            eng = _PolygonEngine(pg.build_tables(body))
        elif body.kind == "ellipse":
            eng = _EllipseEngine(body.a, body.b)
        else:
            eng = _RadialEngine(body)
        _ENGINES[body] = eng
    return eng


def pi_omega_engine(eng: _Engine, theta):
    t = np.asarray(theta, dtype=float)
    k = np.floor(t / eng.period)
    r = t - k * eng.period
    P = eng.cos_sin(r)
    phi = np.mod(np.arctan2(P[..., 1], P[..., 0]), TWO_PI)
    # rounding near the base ray
    phi = np.where((phi > TWO_PI - 1e-9) & (r < 0.5 * eng.period), phi - TWO_PI, phi)
    phi = np.where((phi < 1e-9) & (r > 0.5 * eng.period), phi + TWO_PI, phi)
    return phi + TWO_PI * k


def pi_inv_engine(eng: _Engine, phi):
    f = np.asarray(phi, dtype=float)
    k = np.floor(f / TWO_PI)
    r = f - k * TWO_PI
    th = eng.theta_principal(np.stack([np.cos(r), np.sin(r)], axis=-1))
    th = np.where((r < 1e-9) & (th > 0.5 * eng.period), th - eng.period, th)
    th = np.where((r > TWO_PI - 1e-9) & (th < 0.5 * eng.period), th + eng.period, th)
    return th + eng.period * k


# -- public API ------------------------------------------------------------------

def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def period(body: ConvexBody) -> float:
    """Period ``2 S(Omega)`` of the trigonometric functions."""
    return float(engine(body).period)


def cos_sin(body: ConvexBody, theta) -> np.ndarray:
    """Boundary point ``(cos_Omega theta, sin_Omega theta)``; shape ``theta.shape + (2,)``."""
    return engine(body).cos_sin(theta)


def cos_omega(body: ConvexBody, theta):
    return _out(cos_sin(body, theta)[..., 0])


def sin_omega(body: ConvexBody, theta):
    return _out(cos_sin(body, theta)[..., 1])


def gauge(body: ConvexBody, point):
    """Gauge of the body at ``point`` (the support function of the polar set)."""
    return _out(engine(body).gauge(point))


def theta_of_point(body: ConvexBody, point):
    """Generalized polar coordinates ``(r, theta)`` of a nonzero point.

    ``point = r * cos_sin(body, theta)`` with ``theta`` in ``[0, 2 S(Omega))``.
    """
    X = np.asarray(point, dtype=float)
    if np.any(np.all(X == 0.0, axis=-1)):
        raise ValueError("the origin has no generalized polar coordinates")
    eng = engine(body)
    return _out(eng.gauge(X)), _out(eng.theta_principal(X))


def correspondence(body: ConvexBody, theta: float) -> AngleCorrespondence:
    """Interval of polar angles ``theta°`` matched to ``theta``."""
    lo, hi = engine(body).corr(float(theta))
    return AngleCorrespondence(lo, hi)


def inverse_correspondence(body: ConvexBody, theta_polar: float) -> AngleCorrespondence:
    """Interval of angles ``theta`` matched to the polar angle ``theta_polar``."""
    lo, hi = engine(body).corr_inv(float(theta_polar))
    return AngleCorrespondence(lo, hi)


def derivative(body: ConvexBody, theta: float) -> DerivativePair:
    """One-sided derivatives ``(-sin° theta°_-, cos° theta°_-)`` and the ``theta°_+`` analogue."""
    eng = engine(body)
    if isinstance(eng, _RadialEngine):
        # exact chord directions of the sampled boundary
        lo, hi = eng.normals(float(theta))
        return DerivativePair((float(-lo[1]), float(lo[0])), (float(-hi[1]), float(hi[0])))
    c = eng.corr(float(theta))
    pts = cos_sin(polar(body), np.array(c))
    return DerivativePair((float(-pts[0, 1]), float(pts[0, 0])),
                          (float(-pts[1, 1]), float(pts[1, 0])))


def pi_omega(body: ConvexBody, theta):
    """Continuous classical angle of ``P_theta``; ``pi_omega(2 S k) = 2 pi k``."""
    return _out(pi_omega_engine(engine(body), theta))


def pi_omega_inv(body: ConvexBody, phi):
    """Generalized angle of the boundary point in the classical direction ``phi``."""
    return _out(pi_inv_engine(engine(body), phi))


def _rotation(phi: float) -> np.ndarray:
    q = phi / (0.5 * math.pi)
    if abs(q - round(q)) < 1e-12:
        c, s = [(1, 0), (0, 1), (-1, 0), (0, -1)][int(round(q)) % 4]
        return np.array([[c, -s], [s, c]], dtype=float)
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def rotate(body: ConvexBody, phi: float, n_samples: int | None = None) -> ConvexBody:
    """The rotated body ``e^{i phi} Omega`` in the same representation where possible.

    Ellipses stay ellipses for multiples of ``pi/2`` and become radial otherwise.
    """
    require_valid(body)
    phi = float(phi)
    if phi == 0.0:
        return body
    R = _rotation(phi)
    if body.kind == "polygon":
        return ConvexBody.polygon(body.vertices @ R.T)
    q = phi / (0.5 * math.pi)
    if body.kind == "ellipse" and body.a == body.b:
        return body
    if body.kind == "ellipse" and abs(q - round(q)) < 1e-12:
        if int(round(q)) % 2 == 0:
            return ConvexBody.ellipse(body.a, body.b)
        return ConvexBody.ellipse(body.b, body.a)
    if body.kind == "radial" and n_samples in (None, len(body.samples)):
        N = len(body.samples)
        shift = phi * N / TWO_PI
        if abs(shift - round(shift)) < 1e-9:
            # rotation by whole grid steps
            return ConvexBody.radial(np.roll(body.samples, int(round(shift))))
    if n_samples is None:
        n_samples = len(body.samples) if body.kind == "radial" else DEFAULT_RADIAL_SAMPLES
    grid = phi_grid(n_samples) - phi
    dirs = np.column_stack([np.cos(grid), np.sin(grid)])
    return ConvexBody.radial(1.0 / engine(body).gauge(dirs))


def addition_shift(body: ConvexBody, phi: float) -> float:
    """Shift ``s`` with ``e^{i phi} P_theta(Omega) = P_{theta + s}(e^{i phi} Omega)``.

    Equals ``-pi_omega_inv(Omega, -phi)``; it reduces to ``pi_omega_inv(Omega, phi)``
    when the body is symmetric about the x-axis.
    """
    return -float(pi_omega_inv(body, -float(phi)))
