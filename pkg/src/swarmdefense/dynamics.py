"""Damped double-integrator agents and interception-time geometry.

All agents obey r'' = u - C_D * r' with a hard acceleration bound, which
caps speed at u_max / C_D without any explicit velocity constraint.  The
linear ODE is integrated exactly, so dt is a control-sampling choice and
never an accuracy knob.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

Vec2 = np.ndarray

#: Horizon beyond which a pursuit is declared hopeless (seconds).
DEFAULT_HORIZON = 120.0

#: Bisection tolerance for interception-time root finding (seconds).
TIME_TOL = 1e-3


def _vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(2)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite 2-vector: {x!r}")
    return v


@dataclass(frozen=True)
class AgentParams:
    """Physical limits of one agent class (attacker or defender)."""

    u_max: float                    # acceleration bound, m/s^2
    drag: float                     # C_D, 1/s
    body_radius: float = 0.5        # disc radius, m
    interception_radius: float = 0.0  # capture radius, defenders only, m
    sensing_radius: float = 0.0     # local sensing zone radius, m

    def __post_init__(self):
        if not (self.u_max > 0.0):
            raise ValueError("u_max must be positive")
        if not (self.drag > 0.0):
            raise ValueError("drag coefficient must be positive")
        if not (self.body_radius > 0.0):
            raise ValueError("body_radius must be positive")


@dataclass
class AgentState:
    """Position/velocity of a single agent."""

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.position = _vec(self.position)
        self.velocity = _vec(self.velocity)

    def copy(self) -> "AgentState":
        return AgentState(self.position.copy(), self.velocity.copy())

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


@dataclass(frozen=True)
class WorldGeometry:
    """Protected area, safe areas and the engagement annulus."""

    protected_center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    protected_radius: float = 45.0
    safe_areas: tuple = ()          # tuple of (center 2-vec, radius)
    defense_annulus: tuple = (60.0, 150.0)  # (inner, outer) radii, m

    def __post_init__(self):
        object.__setattr__(self, "protected_center", _vec(self.protected_center))
        if not (self.protected_radius > 0.0):
            raise ValueError("protected_radius must be positive")
        inner, outer = self.defense_annulus
        if not (0.0 < inner < outer):
            raise ValueError("defense annulus radii must satisfy 0 < inner < outer")
        areas = []
        for center, radius in self.safe_areas:
            c = _vec(center)
            if not (radius > 0.0):
                raise ValueError("safe area radius must be positive")
            if np.linalg.norm(c - self.protected_center) < radius + self.protected_radius:
                raise ValueError("safe area overlaps the protected area")
            areas.append((c, float(radius)))
        object.__setattr__(self, "safe_areas", tuple(areas))

    def distance_to_protected(self, point) -> float:
        """Distance from a point to the protected-area boundary (>= 0 outside)."""
        return float(np.linalg.norm(_vec(point) - self.protected_center) - self.protected_radius)

    def nearest_boundary_point(self, point) -> np.ndarray:
        p = _vec(point)
        d = p - self.protected_center
        n = np.linalg.norm(d)
        if n == 0.0:
            raise ValueError("point coincides with the protected center")
        return self.protected_center + d * (self.protected_radius / n)

    def in_protected(self, point) -> bool:
        return self.distance_to_protected(point) <= 0.0

    def nearest_safe_area(self, point):
        """(center, radius) of the safe area closest to ``point``."""
        if not self.safe_areas:
            raise ValueError("no safe areas configured")
        p = _vec(point)
        return min(self.safe_areas, key=lambda sa: float(np.linalg.norm(sa[0] - p)))


class PathParametrization:
    """Arc-length parametrized polyline: maps gamma -> position and tangent."""

    def __init__(self, waypoints):
        pts = np.asarray(waypoints, dtype=float).reshape(-1, 2)
        if len(pts) < 2:
            raise ValueError("a path needs at least two waypoints")
        seg = np.diff(pts, axis=0)
        seg_len = np.linalg.norm(seg, axis=1)
        if np.any(seg_len <= 0.0):
            raise ValueError("degenerate path segment")
        self.waypoints = pts
        self._cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        self._seg_dir = seg / seg_len[:, None]
        self.total_length = float(self._cum[-1])

    def _locate(self, gamma: float):
        g = min(max(float(gamma), 0.0), self.total_length)
        i = int(np.searchsorted(self._cum, g, side="right") - 1)
        i = min(i, len(self._seg_dir) - 1)
        return g, i

    def position_at(self, gamma: float) -> np.ndarray:
        g, i = self._locate(gamma)
        return self.waypoints[i] + self._seg_dir[i] * (g - self._cum[i])

    def tangent_angle_at(self, gamma: float) -> float:
        _, i = self._locate(gamma)
        d = self._seg_dir[i]
        return float(math.atan2(d[1], d[0]))


def speed_bound(params: AgentParams) -> float:
    """Terminal speed u_max / C_D reachable under the acceleration bound."""
    return params.u_max / params.drag


def step(state: AgentState, accel, dt: float, params: AgentParams) -> AgentState:
    """Advance one agent by dt under constant commanded acceleration.

    Uses the closed-form solution of the linear drag ODE.  Accelerations
    above u_max are clamped to the bound (with a warning): controllers may
    momentarily request more, the plant cannot deliver it.
    """
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    a = _vec(accel)
    a_norm = float(np.linalg.norm(a))
    if a_norm > params.u_max * (1.0 + 1e-12):
        log.warning("acceleration %.3f exceeds bound %.3f; clamping", a_norm, params.u_max)
        a = a * (params.u_max / a_norm)
    c = params.drag
    decay = math.exp(-c * dt)
    one_minus = -math.expm1(-c * dt)  # 1 - e^{-c dt}, accurate for small dt
    vel = state.velocity * decay + (a / c) * one_minus
    pos = state.position + state.velocity * (one_minus / c) + (a / c) * (dt - one_minus / c)
    return AgentState(pos, vel)


def time_to_reach(state: AgentState, target, params: AgentParams) -> float:
    """Straight-line travel time at the terminal speed bound."""
    dist = float(np.linalg.norm(_vec(target) - state.position))
    return dist / speed_bound(params)


def reach_distance(t: float, v_par: float, params: AgentParams) -> float:
    """Distance covered in time t accelerating flat-out along a fixed ray.

    v_par is the initial velocity component along the ray; the profile is
    v(t) = v_max - (v_max - v_par) e^{-C_D t}.
    """
    v_max = speed_bound(params)
    c = params.drag
    return v_max * t - (v_max - v_par) * (-math.expm1(-c * t)) / c


def _attacker_path(attacker: AgentState, world: WorldGeometry) -> PathParametrization | None:
    """Straight max-speed route of an attacker to the protected boundary.

    Returns None when the attacker sits exactly on the boundary (zero-length
    path; the attacker is treated as stationary there).
    """
    d = world.distance_to_protected(attacker.position)
    if d < 0.0:
        raise ValueError("attacker is inside the protected area")
    if d == 0.0:
        return None
    return PathParametrization([attacker.position, world.nearest_boundary_point(attacker.position)])


def interception_time(
    defender: AgentState,
    attacker: AgentState,
    world: WorldGeometry,
    d_params: AgentParams,
    a_params: AgentParams,
    horizon: float = DEFAULT_HORIZON,
) -> float:
    """Minimum time for the defender to close on the attacker's future position.

    The attacker is modeled as moving at its speed bound along the straight
    path to the protected area (stopping at the boundary); the defender's
    reach grows per :func:`reach_distance` toward the candidate intercept
    point.  Returns the smallest t in [0, horizon] where the reach covers the
    gap minus the interception radius (bisection to 1e-3 s), else +inf.
    """
    seg = world.distance_to_protected(attacker.position)
    if seg < 0.0:
        raise ValueError("attacker is inside the protected area")
    a0 = attacker.position
    if seg == 0.0:
        direction = np.zeros(2)
    else:
        direction = (world.nearest_boundary_point(a0) - a0) / seg
    v_a = speed_bound(a_params)
    v_d = speed_bound(d_params)
    c = d_params.drag
    d0, dvel = defender.position, defender.velocity
    r_int = d_params.interception_radius

    def gap(ts: np.ndarray) -> np.ndarray:
        travel = np.minimum(v_a * ts, seg)
        rel = (a0[None, :] + travel[:, None] * direction[None, :]) - d0[None, :]
        dist = np.linalg.norm(rel, axis=1)
        safe = np.maximum(dist, 1e-12)
        v_par = (rel @ dvel) / safe
        v_par[dist == 0.0] = 0.0
        reach = v_d * ts - (v_d - v_par) * (-np.expm1(-c * ts)) / c
        return reach - (dist - r_int)

    if gap(np.zeros(1))[0] >= 0.0:
        return 0.0
    # Coarse scan for the first sign change, then bisect.  gap() is not
    # globally monotone (the attacker may fly past the defender), so the
    # scan pitch must resolve the first crossing.
    pitch = 0.25
    ts = np.arange(pitch, horizon + 1e-9, pitch)
    if len(ts) == 0:
        return math.inf
    signs = gap(ts) >= 0.0
    first = np.flatnonzero(signs)
    if len(first) == 0:
        return math.inf
    hi = float(ts[first[0]])
    lo = hi - pitch
    while hi - lo > TIME_TOL:
        mid = 0.5 * (lo + hi)
        if gap(np.array([mid]))[0] >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def winning_region(
    defender: AgentState,
    attacker: AgentState,
    world: WorldGeometry,
    d_params: AgentParams,
    a_params: AgentParams,
) -> bool:
    """True iff the defender can intercept before the attacker reaches the area."""
    t_int = interception_time(defender, attacker, world, d_params, a_params)
    if not math.isfinite(t_int):
        return False
    t_attack = world.distance_to_protected(attacker.position) / speed_bound(a_params)
    return t_int <= t_attack


def time_optimal_traj(start, world: WorldGeometry) -> PathParametrization:
    """Shortest (straight) path from a point to the protected-area boundary."""
    p = _vec(start)
    if world.distance_to_protected(p) <= 0.0:
        raise ValueError("start point is not outside the protected area")
    return PathParametrization([p, world.nearest_boundary_point(p)])


def forward_pursuit_sim(
    defender: AgentState,
    attacker: AgentState,
    world: WorldGeometry,
    d_params: AgentParams,
    a_params: AgentParams,
    dt: float = 1e-3,
    horizon: float = DEFAULT_HORIZON,
) -> float:
    """Validation oracle: forward-simulate a flat-out pursuit.

    The defender accelerates at u_max toward the attacker's current position
    each step; the attacker rides its straight max-speed path.  Returns the
    first time the separation drops to the interception radius, else +inf.
    """
    path = _attacker_path(attacker, world)
    v_a = speed_bound(a_params)
    d_state = defender.copy()
    t = 0.0
    while t <= horizon:
        a_pos = attacker.position if path is None else path.position_at(v_a * t)
        rel = a_pos - d_state.position
        dist = float(np.linalg.norm(rel))
        if dist <= d_params.interception_radius:
            return t
        accel = d_params.u_max * rel / dist
        d_state = step(d_state, accel, dt, d_params)
        t += dt
    return math.inf
