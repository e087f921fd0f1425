"""Exact generalized trigonometry for convex polygons.

Vertex angles ``Theta_k`` are doubled sector areas measured from the point where
the positive x-ray leaves the polygon; ``theta_k = [P_k x P_{k+1}]`` is the doubled
area of the triangle ``O P_k P_{k+1}``.  The polar polygon has vertices
``Q_k = rot(-pi/2)(P_{k+1} - P_k) / theta_k``, one per edge of the polygon, and
its own vertex angles are stored lifted so that ``theta <-> theta_polar`` is a
monotone staircase.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .body import ConvexBody, _cross, polar_vertices, require_valid
from .config import DEFAULT_TOL, Tolerances


@dataclass(frozen=True, eq=False)
class PolygonTables:
    """Precomputed tables of a polygon (arrays are 0-based: index ``i`` is ``P_{i+1}``).

    vertices     : (n, 2) renumbered so that the first-vertex rule holds
    order        : original index of each renumbered vertex
    x_hat        : x-coordinate of the boundary point on the positive x-axis
    Theta        : (n + 1,) vertex angles, ``Theta[n] = Theta[0] + period``
    theta_edge   : (n,) doubled triangle areas ``[P_k x P_{k+1}]``
    polar_vertices : (n, 2) ``Q_k`` dual to edge ``P_k P_{k+1}``
    polar_theta_edge : (n,) ``[Q_k x Q_{k+1}]``
    polar_lift   : (n + 1,) lifted polar angles; ``polar_lift[0]`` belongs to
                   ``Q_n`` and ``polar_lift[k]`` to ``Q_k``, so vertex ``P_k`` maps
                   to ``[polar_lift[k-1], polar_lift[k]]``
    polar_first  : 0-based index of the polar vertex chosen by the first-vertex rule
    """

    vertices: np.ndarray
    order: np.ndarray
    x_hat: float
    Theta: np.ndarray
    theta_edge: np.ndarray
    polar_vertices: np.ndarray
    polar_theta_edge: np.ndarray
    polar_lift: np.ndarray
    polar_first: int
    period: float
    polar_period: float

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def polar_Theta(self) -> np.ndarray:
        """Lifted polar vertex angles ``Theta°_k`` for ``k = 1..n``."""
        return self.polar_lift[1:]

    def rows(self):
        """Rows ``(k, x_k, y_k, Theta_k, theta_k, Q_k.x, Q_k.y, Theta°_k)`` for CSV export."""
        for i in range(self.n):
            yield (i + 1, *self.vertices[i], self.Theta[i], self.theta_edge[i],
                   *self.polar_vertices[i], self.polar_lift[i + 1])


_CACHE: "weakref.WeakKeyDictionary[ConvexBody, PolygonTables]" = weakref.WeakKeyDictionary()


def build_tables(body: ConvexBody) -> PolygonTables:
    """Tables for a valid polygon body (cached per body object)."""
    if body.kind != "polygon":
        raise TypeError(f"build_tables needs a polygon body, got {body.kind}")
    require_valid(body)
    tab = _CACHE.get(body)
    if tab is None:
        tab = tables_from_points(body.vertices)
        _CACHE[body] = tab
    return tab


def _first_vertex(pts: np.ndarray) -> tuple[int, float]:
    """Index of ``P_1`` and the abscissa of the positive x-axis crossing."""
    on_axis = np.flatnonzero((pts[:, 1] == 0.0) & (pts[:, 0] > 0.0))
    if on_axis.size:
        i = int(on_axis[0])
        return i, float(pts[i, 0])
    nxt = np.roll(pts, -1, axis=0)
    up = np.flatnonzero((pts[:, 1] < 0.0) & (nxt[:, 1] > 0.0))
    for i in up:
        p, q = pts[i], nxt[i]
        x = p[0] + (0.0 - p[1]) * (q[0] - p[0]) / (q[1] - p[1])
        if x > 0:
            return (int(i) + 1) % len(pts), float(x)
    raise ValueError("positive x-axis does not cross the boundary; origin not interior?")


def tables_from_points(points: np.ndarray) -> PolygonTables:
    """Build tables for CCW points around the origin; collinear runs are tolerated."""
    pts0 = np.asarray(points, dtype=float)
    n = len(pts0)
    first, x_hat = _first_vertex(pts0)
    order = (np.arange(n) + first) % n
    P = pts0[order]
    P.setflags(write=False)
    nxt = np.roll(P, -1, axis=0)
    theta_edge = _cross(P, nxt)
    Theta = np.empty(n + 1)
    Theta[0] = x_hat * P[0, 1]
    Theta[1:] = Theta[0] + np.cumsum(theta_edge)
    period = float(Theta[n] - Theta[0])

    Q = polar_vertices(P)
    # [Q_k x Q_{k+1}] written through the primal data
    nxt2 = np.roll(P, -2, axis=0)
    th1 = np.roll(theta_edge, -1)
    polar_edge = 1.0 / theta_edge + 1.0 / th1 - _cross(P, nxt2) / (theta_edge * th1)
    polar_period = float(np.sum(polar_edge))

    # polar first-vertex rule: rightmost vertex of the polygon
    xs = P[:, 0]
    m = int(np.argmax(xs))
    if xs[(m + 1) % n] == xs[m]:
        kstar, anchor = m, 0.0
    elif xs[m - 1] == xs[m]:
        kstar, anchor = (m - 1) % n, 0.0
    else:
        # Q_hat = (1/x_m, 0) lies on polar edge Q_{m-1} Q_m; first polar vertex is Q_m
        kstar, anchor = m, float(Q[m, 1] / xs[m])

    # principal polar angles of every Q, walking CCW from the anchor
    principal = np.empty(n)
    acc = anchor
    for j in range(n):
        idx = (kstar + j) % n
        principal[idx] = acc
        acc += polar_edge[idx]
    last = n - 1
    s = principal[last]
    if np.arctan2(Q[last, 1], Q[last, 0]) < 0:
        s -= polar_period
    lift = np.empty(n + 1)
    lift[0] = s
    steps = np.concatenate([[polar_edge[last]], polar_edge[:last]])
    lift[1:] = s + np.cumsum(steps)
    lift[n] = s + polar_period

    for arr in (theta_edge, Theta, Q, polar_edge, lift, order):
        arr.setflags(write=False)
    return PolygonTables(P, order, x_hat, Theta, theta_edge, Q, polar_edge, lift,
                         kstar, period, polar_period)


def _reduce(tables: PolygonTables, theta):
    """Return (lift count m, reduced angle in [Theta_1, Theta_1 + period))."""
    t = np.asarray(theta, dtype=float)
    m = np.floor((t - tables.Theta[0]) / tables.period)
    r = t - m * tables.period
    # guard against r landing exactly on the upper end after rounding
    over = r >= tables.Theta[-1]
    m = np.where(over, m + 1, m)
    r = np.where(over, r - tables.period, r)
    return m, r


def _locate(tables: PolygonTables, r):
    k = np.searchsorted(tables.Theta, r, side="right") - 1
    return np.clip(k, 0, tables.n - 1)


def eval_piecewise(tables: PolygonTables, theta) -> np.ndarray:
    """``(cos, sin)`` of the polygon at ``theta``; shape ``theta.shape + (2,)``."""
    _, r = _reduce(tables, theta)
    k = _locate(tables, r)
    P = tables.vertices
    frac = (r - tables.Theta[k]) / tables.theta_edge[k]
    nxt = (k + 1) % tables.n
    return P[k] + frac[..., None] * (P[nxt] - P[k])


def incident_edges(tables: PolygonTables, theta: float, tol: Tolerances = DEFAULT_TOL):
    """Edges touching the boundary point at ``theta``.

    Returns ``(m, e_lo, e_hi)``: the lift count and the 0-based indices of the
    edges before and after the point (equal unless the point is a vertex).
    Edge ``e`` joins ``vertices[e]`` and ``vertices[e+1]``; ``e = -1`` is the
    last edge of the previous turn.
    """
    m, r = _reduce(tables, float(theta))
    m, r = float(m), float(r)
    k = int(_locate(tables, r))
    eps = tol.vertex * max(1.0, tables.period)
    if abs(r - tables.Theta[k]) <= eps:
        return m, k - 1, k
    if abs(tables.Theta[k + 1] - r) <= eps:
        if k + 1 == tables.n:
            return m + 1, -1, 0
        return m, k, k + 1
    return m, k, k


def stair(tables: PolygonTables, theta: float, tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """Closed interval of polar angles corresponding to ``theta``.

    Inside an edge the interval degenerates to the lifted angle of the polar
    vertex dual to that edge; at a vertex it is the whole dual polar edge.
    """
    m, lo, hi = incident_edges(tables, theta, tol)
    shift = m * tables.polar_period
    L = tables.polar_lift
    return float(L[lo + 1] + shift), float(L[hi + 1] + shift)


def stair_inverse(tables: PolygonTables, theta_polar: float,
                  tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """Closed interval of angles ``theta`` corresponding to ``theta_polar``."""
    L = tables.polar_lift
    pp = tables.polar_period
    t = float(theta_polar)
    m = np.floor((t - L[0]) / pp)
    r = t - m * pp
    if r >= L[-1]:
        m, r = m + 1, r - pp
    j = int(np.clip(np.searchsorted(L, r, side="right") - 1, 0, tables.n - 1))
    shift = float(m) * tables.period
    eps = tol.vertex * max(1.0, pp)
    Theta = tables.Theta
    # piece j lies between lift[j] and lift[j+1] and is dual to vertex j
    if abs(r - L[j]) <= eps:
        # lift[j] is the polar vertex dual to edge j-1
        if j == 0:
            return float(Theta[tables.n - 1] + shift - tables.period), float(Theta[0] + shift)
        return float(Theta[j - 1] + shift), float(Theta[j] + shift)
    if abs(L[j + 1] - r) <= eps:
        return float(Theta[j] + shift), float(Theta[j + 1] + shift)
    val = float(Theta[j] + shift)
    return val, val
