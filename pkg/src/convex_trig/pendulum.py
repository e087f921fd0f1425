"""The generalized pendulum ``theta°'' = sin_Omega theta``.

The state is the polar angle ``theta°`` with velocity ``omega``; the energy
``H = omega**2 / 2 + cos_{Omega°} theta°`` is conserved.

When the polar set is a polygon (polygon and radial bodies) ``cos_{Omega°}`` is
piecewise linear, so every arc is an exact parabola and the run is
event-driven: arrival at a polar vertex, a turning point, and dwell intervals at
the separatrix level.  Ellipses use an adaptive Runge-Kutta integrator.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from . import polygon as pg
from . import trig
from .body import ConvexBody, polar, require_valid, support
from .config import DEFAULT_TOL, Tolerances

REGIMES = ("empty", "bottom-fixed", "oscillation", "separatrix", "rotation")


class SeparatrixPolicyError(RuntimeError):
    """A separatrix endpoint was reached in finite time and no dwell policy was given."""

    def __init__(self, t: float, theta_polar: float):
        self.t, self.theta_polar = t, theta_polar
        super().__init__(
            f"separatrix endpoint theta°={theta_polar:.17g} reached at t={t:.17g}; "
            "the continuation is not unique, pass a dwell policy (stay, dwell or exit)")


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_state: "PendulumState"):
        self.last_state = last_state
        super().__init__(f"{message}; last good state {last_state}")


# -- policies -----------------------------------------------------------------

@dataclass(frozen=True)
class StayForever:
    """Remain at the separatrix endpoint."""


@dataclass(frozen=True)
class Dwell:
    """Rest for ``duration`` and then leave; ``direction`` is +1, -1 or None (keep going)."""

    duration: float
    direction: int | None = None


def ImmediateExit(direction: int | None = None) -> Dwell:
    return Dwell(0.0, direction)


def parse_policy(text: str | None):
    """``stay`` | ``dwell:DT[:DIR]`` | ``exit[:DIR]`` with ``DIR`` in ``+1``/``-1``."""
    if text is None:
        return None
    parts = text.split(":")
    head = parts[0].strip().lower()
    if head == "stay":
        return StayForever()
    if head == "exit":
        return ImmediateExit(int(parts[1]) if len(parts) > 1 else None)
    if head == "dwell" and len(parts) >= 2:
        return Dwell(float(parts[1]), int(parts[2]) if len(parts) > 2 else None)
    raise ValueError(f"unknown policy {text!r}")


# -- states and levels -----------------------------------------------------------

@dataclass(frozen=True)
class PendulumState:
    theta_polar: float
    omega: float
    t: float = 0.0


@dataclass(frozen=True)
class EnergyLevel:
    H: float
    H_minus: float
    H_plus: float
    regime: str
    top_is_interval: bool = False
    bottom_is_interval: bool = False


def _extreme_is_edge(body: ConvexBody, sign: float, tol: Tolerances) -> bool:
    """Does the polar set have a vertical edge at its rightmost (sign=+1) / leftmost point?"""
    if body.kind == "ellipse":
        return False
    pts = polar(body).boundary_points
    x = sign * pts[:, 0]
    return int(np.sum(x >= x.max() - tol.geo * max(1.0, abs(x.max())))) >= 2


def classify(body: ConvexBody, H: float, tol: Tolerances = DEFAULT_TOL) -> EnergyLevel:
    """Regime of the energy level ``H``."""
    P = polar(body)
    h_plus = float(support(P, (1.0, 0.0)))
    h_minus = -float(support(P, (-1.0, 0.0)))
    H = float(H)
    eps = tol.separatrix * max(1.0, abs(h_plus), abs(h_minus))
    if H < h_minus - eps:
        regime = "empty"
    elif abs(H - h_minus) <= eps:
        regime = "bottom-fixed"
    elif abs(H - h_plus) <= eps:
        regime = "separatrix"
    elif H < h_plus:
        regime = "oscillation"
    else:
        regime = "rotation"
    return EnergyLevel(H, h_minus, h_plus, regime,
                       _extreme_is_edge(body, 1.0, tol), _extreme_is_edge(body, -1.0, tol))


def energy(body: ConvexBody, state: PendulumState) -> float:
    return 0.5 * state.omega ** 2 + float(trig.cos_omega(polar(body), state.theta_polar))


# -- piecewise-linear chain ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Chain:
    """``cos_{Omega°}`` as a periodic piecewise-linear function of ``theta°``.

    Piece ``j`` lies between ``breaks[j]`` and ``breaks[j+1]``; there
    ``theta°'' = accel[j]`` and the control is ``controls[j]``.
    """

    breaks: np.ndarray
    cvals: np.ndarray
    accel: np.ndarray
    controls: np.ndarray
    pp: float

    @property
    def n(self):
        return len(self.accel)

    def shift(self, theta):
        m = math.floor((theta - self.breaks[0]) / self.pp)
        r = theta - m * self.pp
        if r >= self.breaks[-1]:
            m, r = m + 1, r - self.pp
        return m, r

    def locate(self, theta, eps):
        """``(m, j, on)``: lift, piece, and whether ``theta`` sits on ``breaks[j]``."""
        m, r = self.shift(theta)
        j = int(np.clip(np.searchsorted(self.breaks, r, side="right") - 1, 0, self.n - 1))
        if abs(r - self.breaks[j]) <= eps:
            return m, j, True
        if abs(self.breaks[j + 1] - r) <= eps:
            if j + 1 == self.n:
                return m + 1, 0, True
            return m, j + 1, True
        return m, j, False

    def cos(self, theta):
        t = np.asarray(theta, dtype=float)
        m = np.floor((t - self.breaks[0]) / self.pp)
        r = t - m * self.pp
        j = np.clip(np.searchsorted(self.breaks, r, side="right") - 1, 0, self.n - 1)
        b0, b1 = self.breaks[j], self.breaks[j + 1]
        c0, c1 = self.cvals[j], self.cvals[j + 1]
        return c0 + (r - b0) / (b1 - b0) * (c1 - c0)


_CHAINS: "weakref.WeakKeyDictionary[ConvexBody, _Chain]" = weakref.WeakKeyDictionary()


def _chain(body: ConvexBody) -> _Chain:
    hit = _CHAINS.get(body)
    if hit is not None:
        return hit
    P = polar(body)
    T = pg.build_tables(P) if P.kind == "polygon" else pg.tables_from_points(P.boundary_points)
    duals = T.polar_vertices
    if body.kind == "polygon":
        # snap onto the exact vertices of the body
        V = body.vertices
        idx = np.argmin(np.linalg.norm(duals[:, None, :] - V[None, :, :], axis=2), axis=1)
        controls = V[idx]
    else:
        controls = duals / trig.gauge(body, duals)[:, None]
    cvals = np.append(T.vertices[:, 0], T.vertices[0, 0])
    ch = _Chain(np.array(T.Theta), cvals, duals[:, 1].copy(), np.array(controls), T.period)
    _CHAINS[body] = ch
    return ch


# -- trajectories --------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """Arc ``theta°(t) = theta0 + omega0 (t - t0) + accel (t - t0)**2 / 2`` with constant control."""

    t0: float
    t1: float
    theta0: float
    omega0: float
    accel: float
    u: tuple
    kind: str = "arc"


@dataclass
class PendulumTrajectory:
    t: np.ndarray
    theta_polar: np.ndarray
    omega: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    energy: np.ndarray
    switch_times: list
    dwell_events: list
    events: list
    segments: list = field(default_factory=list)
    gain: float = 1.0
    exact: bool = True
    dense: object = None

    def rows(self):
        """CSV rows ``(t, theta°, omega, u1, u2, energy, event_flag)`` including event rows."""
        out = [(float(t), float(a), float(w), float(u[0]), float(u[1]), float(e), "")
               for t, a, w, u, e in zip(self.t, self.theta_polar, self.omega, self.u, self.energy)]
        for ev in self.events:
            out.append((ev["t"], ev["theta_polar"], ev["omega"], ev["u"][0], ev["u"][1],
                        ev["energy"], ev["kind"]))
        out.sort(key=lambda r: (r[0], r[6] != ""))
        return out


def _eval_segments(segments, times):
    starts = np.array([s.t0 for s in segments])
    idx = np.clip(np.searchsorted(starts, times, side="right") - 1, 0, len(segments) - 1)
    th = np.empty(len(times))
    om = np.empty(len(times))
    u = np.empty((len(times), 2))
    for i, (k, t) in enumerate(zip(idx, times)):
        s = segments[k]
        tau = t - s.t0
        th[i] = s.theta0 + s.omega0 * tau + 0.5 * s.accel * tau * tau
        om[i] = s.omega0 + s.accel * tau
        u[i] = s.u
    return th, om, u


def _run_chain(body, ch: _Chain, state: PendulumState, duration: float, policy, gain: float,
               tol: Tolerances):
    g = float(gain)
    t_end = state.t + duration
    t, th, om = float(state.t), float(state.theta_polar), float(state.omega)
    E0 = 0.5 * om * om + g * float(ch.cos(th))
    h_top = float(ch.cvals.max())
    h_bot = float(ch.cvals.min())
    sep = abs(E0 / g - h_top) <= tol.separatrix * max(1.0, abs(h_top))
    eps = tol.vertex * max(1.0, ch.pp)
    e_snap = 64 * np.finfo(float).eps * max(1.0, abs(E0), g * float(np.abs(ch.cvals).max()))
    # rest points of the control: where the x-axis meets the boundary
    x_top = float(trig.cos_sin(body, 0.0)[0])
    x_bot = float(trig.cos_sin(body, trig.pi_omega_inv(body, math.pi))[0])
    segs: list[Segment] = []
    events: list[dict] = []
    dwells: list = []
    last_dir = 1 if om > 0 else (-1 if om < 0 else 0)

    def brk(m, j):
        return ch.breaks[j] + m * ch.pp

    def is_top(j):
        return abs(ch.cvals[j] - h_top) <= tol.separatrix * max(1.0, abs(h_top))

    def event(kind, u):
        events.append(dict(t=t, kind=kind, theta_polar=th, omega=om, u=tuple(u),
                           energy=0.5 * om * om + g * float(ch.cos(th))))

    def dwell(until, j):
        nonlocal t
        u = (x_top, 0.0) if is_top(j) else (x_bot, 0.0)
        until = min(until, t_end)
        event("dwell_start", u)
        segs.append(Segment(t, until, th, 0.0, 0.0, u, "dwell"))
        dwells.append((t, until, th))
        t = until
        if t < t_end:
            event("dwell_end", u)

    guard = 0
    while t < t_end:
        guard += 1
        if guard > 10_000_000:
            raise IntegrationError("too many events", PendulumState(th, om, t))
        m, j, on = ch.locate(th, eps)
        if on:
            th = brk(m, j)
        if on and om == 0.0:
            aL, aR = ch.accel[j - 1], ch.accel[j]
            can_r, can_l = aR > 0, aL < 0
            can_stay = min(aL, aR) <= 0.0 <= max(aL, aR)
            if can_stay and not (can_r or can_l):
                dwell(math.inf, j)
                break
            if not can_stay:
                direction = 1 if can_r else -1
            else:
                if policy is None:
                    raise SeparatrixPolicyError(t, th)
                if isinstance(policy, StayForever):
                    dwell(math.inf, j)
                    break
                if policy.duration > 0:
                    dwell(t + policy.duration, j)
                    if t >= t_end:
                        break
                want = policy.direction or last_dir or 1
                if (want > 0 and can_r) or (want < 0 and can_l):
                    direction = 1 if want > 0 else -1
                else:
                    direction = 1 if can_r else -1
            p = j if direction > 0 else (j - 1) % ch.n
            pm = m if direction > 0 or j > 0 else m - 1
        elif on:
            p = j if om > 0 else (j - 1) % ch.n
            pm = m if om > 0 or j > 0 else m - 1
        else:
            p, pm = j, m
        a = g * ch.accel[p]
        u = tuple(ch.controls[p])
        lo, hi = brk(pm, p), brk(pm, p + 1)
        moving = om if om != 0.0 else a
        if moving == 0.0:
            segs.append(Segment(t, t_end, th, 0.0, 0.0, u))
            t = t_end
            break
        target, c_t = (hi, ch.cvals[p + 1]) if moving > 0 else (lo, ch.cvals[p])
        disc = 2.0 * (E0 - g * c_t)
        if sep and is_top(p + 1 if moving > 0 else p):
            disc = 0.0
        elif abs(disc) <= e_snap:
            # turning point on a vertex
            disc = 0.0
        if disc >= 0.0 and not (disc == 0.0 and a * moving > 0):
            wb = math.copysign(math.sqrt(disc), moving)
            delta = target - th
            tau = 2.0 * delta / (om + wb) if om + wb != 0.0 else 0.0
            kind = "switch" if wb != 0.0 else ("separatrix_arrival" if sep else "turn")
            new_th, new_om = target, wb
        else:
            tau = -om / a
            new_th = th - om * om / (2.0 * a)
            new_th = min(max(new_th, lo), hi)
            new_om = 0.0
            kind = "turn"
        segs.append(Segment(t, t + tau, th, om, a, u))
        if t + tau > t_end:
            break
        t += tau
        th, om = new_th, new_om
        if om != 0.0:
            last_dir = 1 if om > 0 else -1
        if kind == "turn":
            last_dir = 1 if a > 0 else -1
        event(kind, u)
    return segs, events, dwells


def control_of_polar(body: ConvexBody, theta_polar, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Boundary point ``(cos_Omega theta, sin_Omega theta)`` matched to ``theta_polar``.

    At a polar vertex the matching angles fill an edge of the body; the edge
    midpoint is returned there.
    """
    tp = np.asarray(theta_polar, dtype=float)
    if body.kind == "ellipse":
        s = tp * body.a * body.b
        return np.stack([body.a * np.cos(s), body.b * np.sin(s)], axis=-1)
    ch = _chain(body)
    flat = tp.ravel()
    m = np.floor((flat - ch.breaks[0]) / ch.pp)
    r = flat - m * ch.pp
    j = np.clip(np.searchsorted(ch.breaks, r, side="right") - 1, 0, ch.n - 1)
    out = ch.controls[j].copy()
    eps = tol.vertex * max(1.0, ch.pp)
    lo = np.abs(r - ch.breaks[j]) <= eps
    hi = np.abs(ch.breaks[j + 1] - r) <= eps
    out[lo] = 0.5 * (ch.controls[j[lo] - 1] + ch.controls[j[lo]])
    jh = (j[hi] + 1) % ch.n
    out[hi] = 0.5 * (ch.controls[jh - 1] + ch.controls[jh])
    return out.reshape(tp.shape + (2,))


def polar_breaks(body: ConvexBody, a: float, b: float) -> np.ndarray:
    """Polar vertex angles strictly between ``a`` and ``b`` (empty for ellipses)."""
    if body.kind == "ellipse":
        return np.empty(0)
    lo, hi = min(a, b), max(a, b)
    ch = _chain(body)
    base = ch.breaks[:-1]
    m0 = math.floor((lo - ch.breaks[0]) / ch.pp) - 1
    m1 = math.floor((hi - ch.breaks[0]) / ch.pp) + 1
    vals = (base[None, :] + ch.pp * np.arange(m0, m1 + 1)[:, None]).ravel()
    vals = np.sort(vals[(vals > lo) & (vals < hi)])
    return vals if b >= a else vals[::-1]


def simulate(body: ConvexBody, initial: PendulumState, duration: float, policy=None,
             n_samples: int = 1001, gain: float = 1.0, tol: Tolerances = DEFAULT_TOL,
             times=None) -> PendulumTrajectory:
    """Integrate ``theta°'' = gain * sin_Omega theta`` from ``initial`` for ``duration``.

    ``policy`` decides what happens at a separatrix endpoint reached in finite
    time; without one such an arrival raises :class:`SeparatrixPolicyError`.
    """
    require_valid(body)
    if duration <= 0:
        raise ValueError("duration must be positive")
    if gain <= 0:
        raise ValueError("gain must be positive")
    ts = (np.linspace(initial.t, initial.t + duration, n_samples) if times is None
          else np.asarray(times, dtype=float))
    if body.kind == "ellipse":
        return _simulate_adaptive(body, initial, duration, ts, gain, tol)
    ch = _chain(body)
    segs, events, dwells = _run_chain(body, ch, initial, duration, policy, gain, tol)
    th, om, u = _eval_segments(segs, ts)
    e = 0.5 * om * om + gain * ch.cos(th)
    theta = trig.theta_of_point(body, u)[1]
    switch = [ev["t"] for ev in events if ev["kind"] in ("switch", "separatrix_arrival")]
    return PendulumTrajectory(ts, th, om, u, np.asarray(theta), e, switch, dwells, events,
                              segs, gain, True)


def _simulate_adaptive(body, initial, duration, ts, gain, tol):
    ab = body.a * body.b

    def rhs(t, y):
        return [y[1], gain * body.b * math.sin(y[0] * ab)]

    def turn(t, y):
        return y[1]
    turn.terminal = False

    if initial.omega == 0.0 and abs(math.sin(initial.theta_polar * ab)) <= 4 * np.finfo(float).eps:
        # equilibrium: the solver would only report spurious turning points
        th = np.full_like(ts, initial.theta_polar)
        om = np.zeros_like(ts)
        u = control_of_polar(body, th)
        e = 0.5 * om + gain * np.cos(th * ab) / body.a
        return PendulumTrajectory(ts, th, om, u, th * ab * ab, e, [], [], [], [], gain, False,
                                  lambda t: np.array([np.full_like(np.asarray(t, float), initial.theta_polar),
                                                      np.zeros_like(np.asarray(t, float))]))

    sol = integrate.solve_ivp(rhs, (initial.t, initial.t + duration),
                              [initial.theta_polar, initial.omega], method="RK45",
                              rtol=tol.ode_rtol, atol=tol.ode_atol, dense_output=True,
                              events=turn)
    if sol.status < 0:
        y = sol.y[:, -1]
        raise IntegrationError(sol.message, PendulumState(float(y[0]), float(y[1]), float(sol.t[-1])))
    Y = sol.sol(ts)
    th, om = Y[0], Y[1]
    u = control_of_polar(body, th)
    e = 0.5 * om * om + gain * np.cos(th * ab) / body.a
    theta = th * ab * ab
    events = []
    for te in sol.t_events[0]:
        y = sol.sol(te)
        events.append(dict(t=float(te), kind="turn", theta_polar=float(y[0]), omega=float(y[1]),
                           u=tuple(control_of_polar(body, y[0])),
                           energy=0.5 * y[1] ** 2 + gain * math.cos(y[0] * ab) / body.a))
    return PendulumTrajectory(ts, th, om, u, theta, e, [], [], events, [], gain, False, sol.sol)


# -- periods -------------------------------------------------------------------------------

def _top_bottom(body: ConvexBody):
    """Polar angles of the rightmost and leftmost points of the polar set."""
    P = polar(body)
    if P.kind == "ellipse":
        return 0.0, 0.5 * trig.period(P)
    ch = _chain(body)
    jt = int(np.argmax(ch.cvals[:-1]))
    jb = int(np.argmin(ch.cvals[:-1]))
    return float(ch.breaks[jt]), float(ch.breaks[jb])


def _cos_polar(body):
    P = polar(body)
    if P.kind == "ellipse":
        return lambda x: trig.cos_omega(P, x)
    ch = _chain(body)
    return ch.cos


def _roots(body, H, tol):
    top, bot = _top_bottom(body)
    pp = trig.period(polar(body))
    if bot < top:
        bot += pp
    c = _cos_polar(body)
    f = lambda x: float(c(x)) - H  # noqa: E731
    r1 = optimize.brentq(f, top, bot, xtol=tol.bisection, rtol=4 * np.finfo(float).eps)
    r2 = optimize.brentq(f, bot, top + pp, xtol=tol.bisection, rtol=4 * np.finfo(float).eps)
    if _is_chain(body):
        ch = _chain(body)
        r1, r2 = _linear_root(ch, H, r1), _linear_root(ch, H, r2)
    return r1, r2


def _is_chain(body) -> bool:
    return polar(body).kind != "ellipse"


def _linear_root(ch: _Chain, H, x):
    """Polish a root of ``cos° = H`` by solving on its linear piece."""
    m, r = ch.shift(x)
    j = int(np.clip(np.searchsorted(ch.breaks, r, side="right") - 1, 0, ch.n - 1))
    c0, c1 = ch.cvals[j], ch.cvals[j + 1]
    if c1 == c0:
        return x
    b0, b1 = ch.breaks[j], ch.breaks[j + 1]
    s = min(max((H - c0) / (c1 - c0), 0.0), 1.0)
    return float(b0 + s * (b1 - b0) + m * ch.pp)


def _linear_integral(ch: _Chain, H, a, b, turning=False):
    """``int_a^b dx / sqrt(H - cos°(x))`` exactly for the piecewise-linear chain.

    With ``turning`` the endpoints are roots of the integrand's denominator; the
    integrand there is set to vanish exactly, because a rounding residue ``g``
    would otherwise enter through ``sqrt(g)``.
    """
    m, r = ch.shift(a)
    shift = m * ch.pp
    total = 0.0
    x = a
    j = int(np.clip(np.searchsorted(ch.breaks, r, side="right") - 1, 0, ch.n - 1))
    while x < b:
        if j == ch.n:
            j, shift = 0, shift + ch.pp
        end = min(b, ch.breaks[j + 1] + shift)
        if end > x:
            g0 = 0.0 if turning and x == a else max(H - float(ch.cos(x)), 0.0)
            g1 = 0.0 if turning and end == b else max(H - float(ch.cos(end)), 0.0)
            dg = g1 - g0
            if abs(dg) <= 1e-14 * max(g0, g1, 1e-300):
                total += (end - x) / math.sqrt(0.5 * (g0 + g1))
            else:
                total += 2.0 * (end - x) * (math.sqrt(g1) - math.sqrt(g0)) / dg
            x = end
        j += 1
    return total


def period(body: ConvexBody, H: float, tol: Tolerances = DEFAULT_TOL) -> float | None:
    """Oscillation or rotation period at energy ``H``; ``None`` for empty and fixed regimes."""
    lvl = classify(body, H, tol)
    if lvl.regime == "separatrix":
        raise ValueError("period undefined on the separatrix level")
    if lvl.regime in ("empty", "bottom-fixed"):
        return None
    P = polar(body)
    pp = trig.period(P)
    if lvl.regime == "oscillation":
        if P.kind != "ellipse":
            r1, r2 = _roots(body, H, tol)
            return math.sqrt(2.0) * _linear_integral(_chain(body), H, r1, r2, turning=True)
        # classical pendulum in the variable ab*theta°
        a, b = body.a, body.b
        return 4.0 * float(special.ellipk(0.5 * (1.0 + a * H))) / (math.sqrt(a) * b)
    if P.kind != "ellipse":
        top, _ = _top_bottom(body)
        return _linear_integral(_chain(body), H, top, top + pp) / math.sqrt(2.0)
    c = _cos_polar(body)
    val, _ = integrate.quad(lambda x: 1.0 / math.sqrt(H - float(c(x))), 0.0, pp, limit=400,
                            epsabs=1e-13, epsrel=1e-12)
    return val / math.sqrt(2.0)


# -- phase portrait --------------------------------------------------------------------------

@dataclass(frozen=True)
class PortraitCurve:
    H: float
    regime: str
    theta_polar: np.ndarray
    omega_upper: np.ndarray
    omega_lower: np.ndarray

    @property
    def empty(self) -> bool:
        return bool(np.all(np.isnan(self.omega_upper)))


def phase_portrait(body: ConvexBody, H_list, samples_per_curve: int = 400,
                   tol: Tolerances = DEFAULT_TOL) -> list[PortraitCurve]:
    """Level curves ``omega = +-sqrt(2 (H - cos° theta°))`` over one polar period."""
    top, _ = _top_bottom(body)
    pp = trig.period(polar(body))
    x = np.linspace(top, top + pp, samples_per_curve)
    cx = np.asarray(_cos_polar(body)(x), dtype=float)
    curves = []
    for H in H_list:
        lvl = classify(body, H, tol)
        g = 2.0 * (float(H) - cx)
        w = np.where(g >= 0, np.sqrt(np.clip(g, 0.0, None)), np.nan)
        curves.append(PortraitCurve(float(H), lvl.regime, x, w, -w))
    return curves
