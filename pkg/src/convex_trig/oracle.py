"""Slow brute-force reference computations.

Nothing here imports the trigonometry or polygon-table code: the sector oracle
rebuilds the boundary from the raw body description on a dense ray grid, and the
ODE oracle is a fixed-step classical Runge-Kutta integrator of the raw state
equations with the control supplied by the caller.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .body import ConvexBody


@dataclass(frozen=True)
class OracleConfig:
    boundary_samples: int = 1_000_000
    ode_steps: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.boundary_samples <= 0 or self.ode_steps <= 0:
            raise ValueError("sample counts must be positive")


DEFAULT_ORACLE = OracleConfig()


def _edge_normals(pts: np.ndarray) -> np.ndarray:
    """``n_k`` with ``<n_k, P_k> = <n_k, P_{k+1}> = 1`` by a direct linear solve."""
    nxt = np.roll(pts, -1, axis=0)
    A = np.stack([pts, nxt], axis=1)
    return np.linalg.solve(A, np.ones((len(pts), 2, 1)))[..., 0]


def _radius(body: ConvexBody, phi: np.ndarray, chunk: int = 200_000) -> np.ndarray:
    """Distance from the origin to the boundary along each direction ``phi``."""
    d = np.column_stack([np.cos(phi), np.sin(phi)])
    if body.kind == "ellipse":
        return 1.0 / np.hypot(d[:, 0] / body.a, d[:, 1] / body.b)
    if body.kind == "polygon":
        normals = _edge_normals(np.asarray(body.vertices, dtype=float))
        out = np.empty(len(phi))
        for s in range(0, len(phi), chunk):
            out[s:s + chunk] = 1.0 / (d[s:s + chunk] @ normals.T).max(axis=1)
        return out
    r = np.asarray(body.samples, dtype=float)
    N = len(r)
    grid = 2 * np.pi * np.arange(N) / N
    pts = np.column_stack([r * np.cos(grid), r * np.sin(grid)])
    normals = _edge_normals(pts)
    cell = np.floor(np.mod(phi, 2 * np.pi) / (2 * np.pi / N)).astype(int) % N
    return 1.0 / np.sum(normals[cell] * d, axis=1)


_SWEEPS: "weakref.WeakKeyDictionary[ConvexBody, dict]" = weakref.WeakKeyDictionary()


def _sweep(body: ConvexBody, n: int):
    cache = _SWEEPS.setdefault(body, {})
    if n not in cache:
        phi = 2 * np.pi * np.arange(n + 1) / n
        rho = _radius(body, phi)
        X = np.column_stack([rho * np.cos(phi), rho * np.sin(phi)])
        cr = X[:-1, 0] * X[1:, 1] - X[:-1, 1] * X[1:, 0]
        cache[n] = (X, np.concatenate([[0.0], np.cumsum(cr)]))
    return cache[n]


def sector_theta(body: ConvexBody, point, config: OracleConfig = DEFAULT_ORACLE,
                 max_distance: float = 1e-6) -> float:
    """Doubled area swept counter-clockwise from the positive x-ray to ``point``.

    The boundary is replaced by the polygon through ``config.boundary_samples``
    points spaced uniformly in the classical angle.
    """
    P = np.asarray(point, dtype=float)
    n = config.boundary_samples
    phi = math.atan2(P[1], P[0]) % (2 * math.pi)
    rho = float(_radius(body, np.array([phi]))[0])
    if abs(math.hypot(P[0], P[1]) - rho) > max_distance:
        raise ValueError(f"point {P.tolist()} is not on the boundary (radius {rho:.17g})")
    X, cum = _sweep(body, n)
    i = min(int(phi / (2 * math.pi / n)), n - 1)
    Xi = X[i]
    return float(cum[i] + Xi[0] * P[1] - Xi[1] * P[0])


# -- ODE reference ---------------------------------------------------------------------------

def state_rhs(system: str, y, u) -> list:
    """Raw state equations of the five systems."""
    x1, x2 = y[0], y[1]
    u1, u2 = u[0], u[1]
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
    if system == "cartan":
        return [u1, u2, zd, 0.5 * x1 * x1 * u2, wd]
    raise ValueError(f"unknown system {system!r}")


DIMS = {"heisenberg": 3, "grushin": 2, "martinet": 3, "engel": 4, "cartan": 5}


def _axpy(y, h, k):
    return [a + h * b for a, b in zip(y, k)]


def ode_reference(system: str, control, T: float, steps: int, x0=None, breakpoints=(),
                  sample_times=None):
    """Classical RK4 for the state equations driven by ``control``.

    ``control`` maps an array of times to an ``(n, 2)`` array of controls.
    ``breakpoints`` are times where the control may jump; steps never straddle
    them and the control is sampled just inside each sub-interval.  Returns the
    step times and states, or the states at ``sample_times`` by cubic Hermite
    interpolation on the steps.
    """
    y = [0.0] * DIMS[system] if x0 is None else [float(v) for v in x0]
    if len(y) != DIMS[system]:
        raise ValueError(f"{system} has {DIMS[system]} state coordinates")
    cuts = sorted({0.0, float(T), *[float(b) for b in breakpoints if 0.0 < b < T]})
    counts = np.maximum(1, np.round(steps * np.diff(cuts) / T).astype(int))
    nudge = 1e-7 if len(cuts) > 2 else 0.0
    t0s, y0s, d0s, t1s, y1s, d1s = [], [], [], [], [], []
    for a, b, m in zip(cuts[:-1], cuts[1:], counts):
        h = (b - a) / m
        nodes = a + h * np.arange(m + 1)
        nodes[-1] = b
        lo, hi = a + nudge * (b - a), b - nudge * (b - a)
        U = np.asarray(control(np.clip(nodes, lo, hi)), dtype=float).tolist()
        Um = np.asarray(control(nodes[:-1] + 0.5 * h), dtype=float).tolist()
        k1 = state_rhs(system, y, U[0])
        for k in range(m):
            k2 = state_rhs(system, _axpy(y, 0.5 * h, k1), Um[k])
            k3 = state_rhs(system, _axpy(y, 0.5 * h, k2), Um[k])
            k4 = state_rhs(system, _axpy(y, h, k3), U[k + 1])
            y_next = [yi + (h / 6.0) * (p + 2 * q + 2 * r + s)
                      for yi, p, q, r, s in zip(y, k1, k2, k3, k4)]
            d_next = state_rhs(system, y_next, U[k + 1])
            t0s.append(nodes[k]), y0s.append(y), d0s.append(k1)
            t1s.append(nodes[k + 1]), y1s.append(y_next), d1s.append(d_next)
            y, k1 = y_next, d_next
    ts = np.array([0.0] + t1s)
    ys = np.array([y0s[0]] + y1s)
    if sample_times is None:
        return ts, ys
    arrays = tuple(np.array(v) for v in (t0s, y0s, d0s, t1s, y1s, d1s))
    return _hermite(arrays, np.asarray(sample_times, dtype=float))


def _hermite(steps, tq):
    t0, y0, d0, t1, y1, d1 = steps
    i = np.clip(np.searchsorted(t0, tq, side="right") - 1, 0, len(t0) - 1)
    h = (t1[i] - t0[i])[:, None]
    s = (tq[:, None] - t0[i][:, None]) / h
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    return h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i]
