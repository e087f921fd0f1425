"""Planar convex bodies containing the origin in their interior.

Three representations are supported:

* ``polygon`` -- counter-clockwise vertex list;
* ``ellipse`` -- axis-aligned, origin-centred semi-axes ``a`` and ``b``;
* ``radial`` -- boundary samples ``r_j`` at the classical angles
  ``phi_j = 2*pi*j/N``; consecutive samples are joined by straight chords, so a
  radial body is the polygon through its samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT_RADIAL_SAMPLES, DEFAULT_TOL, Tolerances

KINDS = ("polygon", "ellipse", "radial")


class BodySpecError(ValueError):
    """Raised for a malformed JSON body description."""


class InvalidBodyError(ValueError):
    """Raised when an operation receives a body that violates its invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid convex body: {msg}")


@dataclass(frozen=True)
class Violation:
    invariant: str
    detail: str

    def __str__(self):
        return f"{self.invariant}: {self.detail}"


def _frozen_array(values, ndim) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise BodySpecError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Immutable convex body. Use the ``polygon``/``ellipse``/``radial`` constructors."""

    kind: str
    vertices: np.ndarray | None = None
    a: float | None = None
    b: float | None = None
    samples: np.ndarray | None = None
    meta: dict = field(default_factory=dict, repr=False)

    # -- constructors -------------------------------------------------------
    @classmethod
    def polygon(cls, vertices) -> "ConvexBody":
        verts = _frozen_array(vertices, 2)
        if verts.shape[1] != 2:
            raise BodySpecError(f"polygon vertices must be pairs, got shape {verts.shape}")
        return cls("polygon", vertices=verts)

    @classmethod
    def ellipse(cls, a: float, b: float) -> "ConvexBody":
        return cls("ellipse", a=float(a), b=float(b))

    @classmethod
    def radial(cls, samples) -> "ConvexBody":
        return cls("radial", samples=_frozen_array(samples, 1))

    @classmethod
    def radial_from_function(cls, r: Callable[[np.ndarray], np.ndarray],
                             n: int = DEFAULT_RADIAL_SAMPLES) -> "ConvexBody":
        return cls.radial(np.asarray(r(phi_grid(n)), dtype=float))

    @classmethod
    def from_spec(cls, spec: dict) -> "ConvexBody":
        """Build a body from the JSON schema used by the command line."""
        if not isinstance(spec, dict) or "type" not in spec:
            raise BodySpecError("body spec must be an object with a 'type' field")
        kind = spec["type"]
        try:
            if kind == "polygon":
                return cls.polygon(spec["vertices"])
            if kind == "ellipse":
                return cls.ellipse(float(spec["a"]), float(spec["b"]))
            if kind == "radial":
                return cls.radial(spec["samples"])
        except KeyError as exc:
            raise BodySpecError(f"{kind} body spec lacks field {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, BodySpecError):
                raise
            raise BodySpecError(f"bad {kind} body spec: {exc}") from None
        raise BodySpecError(f"unknown body type {kind!r}; expected one of {KINDS}")

    def to_spec(self) -> dict:
        if self.kind == "polygon":
            return {"type": "polygon", "vertices": self.vertices.tolist()}
        if self.kind == "ellipse":
            return {"type": "ellipse", "a": self.a, "b": self.b}
        return {"type": "radial", "samples": self.samples.tolist()}

    # -- derived geometry ---------------------------------------------------
    @property
    def boundary_points(self) -> np.ndarray:
        """Vertices of the polygonal boundary (polygon or radial kinds)."""
        if self.kind == "polygon":
            return self.vertices
        if self.kind == "radial":
            return self._radial_points
        raise TypeError("an ellipse has no vertex list")

    @cached_property
    def _radial_points(self) -> np.ndarray:
        phi = phi_grid(len(self.samples))
        pts = np.column_stack([self.samples * np.cos(phi), self.samples * np.sin(phi)])
        pts[0, 1] = 0.0
        pts.setflags(write=False)
        return pts

    @cached_property
    def violations(self) -> tuple:
        return tuple(validate(self))

    @cached_property
    def _polar(self) -> "ConvexBody":
        return _compute_polar(self)

    def is_centrally_symmetric(self, tol: float = 1e-9) -> bool:
        if self.kind == "ellipse":
            return True
        pts = self.boundary_points
        if self.kind == "radial":
            n = len(self.samples)
            return n % 2 == 0 and np.allclose(self.samples, np.roll(self.samples, n // 2), atol=tol)
        dist = np.linalg.norm(pts[:, None, :] + pts[None, :, :], axis=2)
        return bool(np.all(dist.min(axis=1) <= tol))


def phi_grid(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


# -- validation -------------------------------------------------------------

def validate(body: ConvexBody, tol: Tolerances = DEFAULT_TOL) -> list[Violation]:
    """Return the list of violated invariants (empty when the body is valid)."""
    if body.kind == "polygon":
        return _validate_polygon(body.vertices, tol.geo)
    if body.kind == "ellipse":
        out = []
        for name in ("a", "b"):
            val = getattr(body, name)
            if val is None or not math.isfinite(val) or val <= 0:
                out.append(Violation("semi-axis", f"{name}={val} must be finite and > 0"))
        return out
    if body.kind == "radial":
        return _validate_radial(body, tol.geo)
    return [Violation("kind", f"unknown kind {body.kind!r}")]


def _validate_polygon(verts: np.ndarray, eps: float) -> list[Violation]:
    if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
        return [Violation("vertex-count", f"need at least 3 planar vertices, got shape {verts.shape}")]
    if not np.all(np.isfinite(verts)):
        return [Violation("non-finite", "vertex coordinates must be finite")]
    scale = max(float(np.abs(verts).max()), 1e-300)
    nxt = np.roll(verts, -1, axis=0)
    edges = nxt - verts
    out = []
    dup = np.flatnonzero(np.linalg.norm(edges, axis=1) <= eps * scale)
    if dup.size:
        out.append(Violation("duplicate-vertex", f"vertices {dup.tolist()} repeat their successor"))
        return out
    signed = 0.5 * float(np.sum(_cross(verts, nxt)))
    if signed <= 0:
        out.append(Violation("orientation", f"vertices are not counter-clockwise (signed area {signed:.6g})"))
        return out
    turns = _cross(edges, np.roll(edges, -1, axis=0))
    eps2 = eps * scale * scale
    bad = np.flatnonzero(turns < -eps2)
    if bad.size:
        out.append(Violation("convexity", f"reflex turn after vertices {((bad + 1) % len(verts)).tolist()}"))
    flat = np.flatnonzero(np.abs(turns) <= eps2)
    if flat.size:
        out.append(Violation("collinear", f"vertices {((flat + 1) % len(verts)).tolist()} are collinear with their neighbours"))
    if not bad.size:
        angles = np.arctan2(turns, np.sum(edges * np.roll(edges, -1, axis=0), axis=1))
        if abs(float(np.sum(angles)) - 2 * np.pi) > 1e-6:
            out.append(Violation("convexity", "boundary winds more than once"))
    origin = _cross(verts, nxt)
    off = np.flatnonzero(origin <= eps2)
    if off.size:
        out.append(Violation("origin-not-interior",
                             f"origin is not strictly left of edges {off.tolist()} (cross {origin[off].tolist()})"))
    return out


def _validate_radial(body: ConvexBody, eps: float) -> list[Violation]:
    r = body.samples
    if r.ndim != 1 or len(r) < 3:
        return [Violation("radial-samples", f"need at least 3 samples, got shape {r.shape}")]
    if not np.all(np.isfinite(r)):
        return [Violation("non-finite", "radial samples must be finite")]
    if r.min() <= 0:
        return [Violation("radial-positive", f"min r = {r.min():.6g} must be > 0 (origin interior)")]
    pts = body._radial_points
    edges = np.roll(pts, -1, axis=0) - pts
    turns = _cross(edges, np.roll(edges, -1, axis=0))
    scale = float(r.max())
    bad = np.flatnonzero(turns < -eps * scale * scale)
    if bad.size:
        return [Violation("radial-convexity", f"polygon through samples is reflex at {((bad + 1) % len(r)).tolist()[:10]}")]
    return []


def require_valid(body: ConvexBody) -> ConvexBody:
    if body.violations:
        raise InvalidBodyError(body.violations)
    return body


def canonicalize(body: ConvexBody, tol: Tolerances = DEFAULT_TOL) -> ConvexBody:
    """Repair a polygon vertex list: orient CCW, drop duplicate and collinear vertices."""
    if body.kind != "polygon":
        return body
    pts = [np.asarray(p, dtype=float) for p in body.vertices]
    scale = max(float(np.abs(body.vertices).max()), 1e-300)
    area = 0.5 * sum(float(_cross(p, q)) for p, q in zip(pts, pts[1:] + pts[:1]))
    if area < 0:
        pts = pts[::-1]
    # drop one offending vertex at a time so neighbours are always current
    while len(pts) >= 3:
        n = len(pts)
        for i in range(n):
            prev, cur, nxt = pts[i - 1], pts[i], pts[(i + 1) % n]
            if (np.linalg.norm(cur - prev) <= tol.geo * scale
                    or abs(float(_cross(cur - prev, nxt - cur))) <= tol.geo * scale * scale):
                del pts[i]
                break
        else:
            break
    return ConvexBody.polygon(np.array(pts))


# -- support, polar, area ---------------------------------------------------

def support(body: ConvexBody, direction) -> float | np.ndarray:
    """Support function ``sup_{(x,y) in body} p*x + q*y`` (vectorized over directions)."""
    require_valid(body)
    d = np.asarray(direction, dtype=float)
    if body.kind == "ellipse":
        out = np.hypot(body.a * d[..., 0], body.b * d[..., 1])
    else:
        out = _max_dot(body.boundary_points, d)
    return float(out) if np.ndim(out) == 0 else out


def _max_dot(points: np.ndarray, d: np.ndarray, chunk: int = 1 << 20) -> np.ndarray:
    flat = d.reshape(-1, 2)
    out = np.empty(len(flat))
    step = max(1, chunk // len(points))
    for s in range(0, len(flat), step):
        out[s:s + step] = (flat[s:s + step] @ points.T).max(axis=1)
    return out.reshape(d.shape[:-1])


def polar_vertices(vertices: np.ndarray) -> np.ndarray:
    """Vertices ``Q_k`` of the polar polygon; ``Q_k`` is dual to edge ``P_k P_{k+1}``."""
    nxt = np.roll(vertices, -1, axis=0)
    theta = _cross(vertices, nxt)
    return np.column_stack([(nxt[:, 1] - vertices[:, 1]) / theta,
                            (vertices[:, 0] - nxt[:, 0]) / theta])


def polar(body: ConvexBody) -> ConvexBody:
    """Polar set ``{(p,q): p*x + q*y <= 1 on body}`` in the same representation."""
    require_valid(body)
    return body._polar


def _compute_polar(body: ConvexBody) -> ConvexBody:
    if body.kind == "polygon":
        return ConvexBody.polygon(polar_vertices(body.vertices))
    if body.kind == "ellipse":
        return ConvexBody.ellipse(1.0 / body.a, 1.0 / body.b)
    phi = phi_grid(len(body.samples))
    dirs = np.column_stack([np.cos(phi), np.sin(phi)])
    return ConvexBody.radial(1.0 / _max_dot(body.boundary_points, dirs))


def area(body: ConvexBody) -> float:
    """Area of the body (radial bodies: area of the polygon through the samples)."""
    require_valid(body)
    if body.kind == "ellipse":
        return math.pi * body.a * body.b
    pts = body.boundary_points
    return 0.5 * float(np.sum(_cross(pts, np.roll(pts, -1, axis=0))))


def regular_polygon(n: int, radius: float = 1.0, phase: float = 0.0) -> ConvexBody:
    ang = phase + 2 * np.pi * np.arange(n) / n
    return ConvexBody.polygon(radius * np.column_stack([np.cos(ang), np.sin(ang)]))


def box(hx: float = 1.0, hy: float | None = None) -> ConvexBody:
    """The rectangle ``{|x| <= hx, |y| <= hy}``."""
    hy = hx if hy is None else hy
    return ConvexBody.polygon([[hx, -hy], [hx, hy], [-hx, hy], [-hx, -hy]])


def cross_polytope(h: float = 1.0) -> ConvexBody:
    """The diamond ``{|x| + |y| <= h}``."""
    return ConvexBody.polygon([[h, 0.0], [0.0, h], [-h, 0.0], [0.0, -h]])


def as_points(seq: Sequence) -> np.ndarray:
    return np.asarray(seq, dtype=float).reshape(-1, 2)
