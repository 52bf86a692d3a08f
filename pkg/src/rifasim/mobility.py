"""Node kinematics, random-waypoint mobility, and link-lifetime geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

MOVING = "moving"
PAUSED = "paused"

TWO_PI = 2.0 * math.pi


class NotANeighborError(ValueError):
    """Link computation requested for a pair farther apart than the radio range."""


class OutsideAreaError(ValueError):
    """Kinematics lie outside the simulation area."""


@dataclass(frozen=True)
class AreaSpec:
    """Rectangular simulation area, origin at the lower-left corner."""

    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"area dimensions must be positive, got {self.width}x{self.height}")

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height


@dataclass(frozen=True)
class NodeKinematics:
    """Position plus velocity (speed in m/s, heading in radians in [0, 2*pi))."""

    x: float
    y: float
    speed: float = 0.0
    heading: float = 0.0

    @property
    def vx(self) -> float:
        return self.speed * math.cos(self.heading)

    @property
    def vy(self) -> float:
        return self.speed * math.sin(self.heading)


@dataclass(frozen=True)
class WaypointState:
    """Waypoint-model state: where the node is headed and whether it is resting.

    The next leg's target and speed are drawn at arrival, so a paused node
    already knows where it will go when the pause runs out.
    """

    target: tuple[float, float]
    pause_remaining: float
    phase: str  # MOVING or PAUSED


def _heading_toward(x: float, y: float, target: tuple[float, float]) -> float:
    return math.atan2(target[1] - y, target[0] - x) % TWO_PI


def draw_leg(x, y, area: AreaSpec, speeds, pauses, rng):
    """Draw the post-arrival state at (x, y): pause first, then target, then speed.

    The draw order is part of the determinism contract; both `advance_waypoint`
    and the event-driven engine consume the stream in this order.
    """
    pause = float(rng.uniform(pauses[0], pauses[1]))
    tx = float(rng.uniform(0.0, area.width))
    ty = float(rng.uniform(0.0, area.height))
    speed = float(rng.uniform(speeds[0], speeds[1]))
    return pause, (tx, ty), speed


def initial_waypoint_state(kin: NodeKinematics, area, speeds, pauses, rng):
    """Spawn a node as if it had just arrived at its starting position."""
    pause, target, speed = draw_leg(kin.x, kin.y, area, speeds, pauses, rng)
    heading = _heading_toward(kin.x, kin.y, target)
    new_kin = NodeKinematics(kin.x, kin.y, speed, heading)
    phase = PAUSED if pause > 0 else MOVING
    return new_kin, WaypointState(target, pause, phase)


def advance_waypoint(kin: NodeKinematics, wp: WaypointState, dt: float,
                     area: AreaSpec, speeds, pauses, rng):
    """Advance one node by dt seconds under the random-waypoint model.

    Paused nodes sit still and burn pause time. Moving nodes travel
    min(speed*dt, remaining distance) toward the target; on arrival a new
    pause, target, and speed are drawn (in that order). Leftover dt after a
    phase change is dropped rather than chained into the next leg.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not area.contains(kin.x, kin.y):
        raise OutsideAreaError(f"position ({kin.x}, {kin.y}) outside {area.width}x{area.height} area")

    if wp.phase == PAUSED:
        remaining = wp.pause_remaining - dt
        if remaining > 0:
            return kin, replace(wp, pause_remaining=remaining)
        new_kin = replace(kin, heading=_heading_toward(kin.x, kin.y, wp.target))
        return new_kin, WaypointState(wp.target, 0.0, MOVING)

    dx = wp.target[0] - kin.x
    dy = wp.target[1] - kin.y
    dist = math.hypot(dx, dy)
    step = kin.speed * dt
    if step < dist:
        f = step / dist
        new_kin = replace(kin, x=kin.x + dx * f, y=kin.y + dy * f,
                          heading=_heading_toward(kin.x, kin.y, wp.target))
        return new_kin, wp

    # Arrived; snap to the target and redraw.
    x, y = wp.target
    pause, target, speed = draw_leg(x, y, area, speeds, pauses, rng)
    heading = _heading_toward(x, y, target)
    new_kin = NodeKinematics(x, y, speed, heading)
    if pause > 0:
        return new_kin, WaypointState(target, pause, PAUSED)
    return new_kin, WaypointState(target, 0.0, MOVING)


def distance(a: NodeKinematics, b: NodeKinematics) -> float:
    """Euclidean distance between two nodes."""
    return math.hypot(a.x - b.x, a.y - b.y)


def link_expiry_from_components(px, py, pvx, pvy, qx, qy, qvx, qvy, tr):
    """Time until two constant-velocity points first separate beyond tr.

    Core of the link-expiry computation, taking velocity components directly
    so callers that already track components avoid the trig round trip.
    Assumes the pair is currently within tr; returns +inf for zero relative
    velocity and clamps roundoff at the range boundary to 0.
    """
    a = pvx - qvx
    b = px - qx
    c = pvy - qvy
    d = py - qy
    v2 = a * a + c * c
    if v2 == 0.0:
        return math.inf
    disc = v2 * tr * tr - (a * d - b * c) ** 2
    if disc < 0.0:  # only roundoff, in-range pairs have non-negative discriminant
        disc = 0.0
    t = (-(a * b + c * d) + math.sqrt(disc)) / v2
    return t if t > 0.0 else 0.0


def link_expiry_time(p: NodeKinematics, q: NodeKinematics, tr: float) -> float:
    """Seconds until p and q drift out of range tr at constant velocity (Eq.-style closed form)."""
    if distance(p, q) > tr:
        raise NotANeighborError(f"nodes are {distance(p, q):.3f} m apart, beyond range {tr}")
    return link_expiry_from_components(p.x, p.y, p.vx, p.vy, q.x, q.y, q.vx, q.vy, tr)


def remaining_distance(p: NodeKinematics, q: NodeKinematics, tr: float) -> float:
    """Relative travel distance left before the pair separates beyond tr.

    Equals relative speed times the link expiry time; +inf when the relative
    velocity is zero (the link never breaks under constant velocity).
    """
    if distance(p, q) > tr:
        raise NotANeighborError(f"nodes are {distance(p, q):.3f} m apart, beyond range {tr}")
    a = p.vx - q.vx
    b = p.x - q.x
    c = p.vy - q.vy
    d = p.y - q.y
    v2 = a * a + c * c
    if v2 == 0.0:
        return math.inf
    disc = v2 * tr * tr - (a * d - b * c) ** 2
    if disc < 0.0:
        disc = 0.0
    rd = (-(a * b + c * d) + math.sqrt(disc)) / math.sqrt(v2)
    return rd if rd > 0.0 else 0.0
