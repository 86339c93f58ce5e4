"""Intersection layout, navigation paths, and occupancy geometry.

Coordinates: x east, y north, origin at the intersection centre.  Traffic
drives on the left, so a vehicle heading south (entering from the north
arm) keeps to the lane at x = +lane_width/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class Arm(Enum):
    """Entry road of a vehicle, named by compass direction."""

    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3

    @property
    def entry_heading(self) -> float:
        # Heading (radians, CCW from +x) of a vehicle entering from this arm.
        return (-math.pi / 2.0, math.pi, math.pi / 2.0, 0.0)[self.value]


class Maneuver(Enum):
    STRAIGHT = "straight"
    TURN_LEFT = "left"
    TURN_RIGHT = "right"


# Arms listed clockwise when viewed from above with y north; the arm on a
# driver's left (left-hand traffic) is the next one in this cycle.
_CYCLE = (Arm.NORTH, Arm.EAST, Arm.SOUTH, Arm.WEST)


def opposite(arm: Arm) -> Arm:
    return _CYCLE[(arm.value + 2) % 4]


def left_of(j_arm: Arm, k_arm: Arm) -> bool:
    """True iff a vehicle entering from ``j_arm`` approaches from the
    left-hand side of one entering from ``k_arm``.

    Opposite arms are neither left nor right of each other.
    """
    if j_arm is k_arm:
        raise ValueError("left_of requires distinct arms")
    return j_arm.value == (k_arm.value + 1) % 4


@dataclass(frozen=True)
class IntersectionLayout:
    """Square conflict area with one two-lane road per compass direction.

    ``exit_overhang`` is how far past the box a route extends before the
    vehicle counts as having left the scene; routes end there.
    """

    lane_width: float = 3.5
    box_half_width: float = 5.5
    arm_length: float = 14.0
    exit_overhang: float = 6.0

    def __post_init__(self) -> None:
        if self.lane_width <= 0 or self.arm_length <= 0:
            raise ValueError("lane_width and arm_length must be positive")
        if self.box_half_width < self.lane_width:
            raise ValueError("box_half_width must cover two lanes")
        if self.exit_overhang <= 0:
            raise ValueError("exit_overhang must be positive")

    @property
    def lane_offset(self) -> float:
        return self.lane_width / 2.0


@dataclass(frozen=True)
class _Straight:
    x0: float
    y0: float
    heading: float
    length: float

    def pose(self, u: float) -> tuple[float, float, float]:
        return (
            self.x0 + u * math.cos(self.heading),
            self.y0 + u * math.sin(self.heading),
            self.heading,
        )


@dataclass(frozen=True)
class _Arc:
    cx: float
    cy: float
    radius: float
    phi0: float
    sweep: float  # signed; positive = counter-clockwise

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    def pose(self, u: float) -> tuple[float, float, float]:
        sign = 1.0 if self.sweep >= 0 else -1.0
        phi = self.phi0 + sign * u / self.radius
        return (
            self.cx + self.radius * math.cos(phi),
            self.cy + self.radius * math.sin(phi),
            phi + sign * math.pi / 2.0,
        )


def _rotate(point: tuple[float, float], angle: float) -> tuple[float, float]:
    c, s = math.cos(angle), math.sin(angle)
    x, y = point
    return (c * x - s * y, s * x + c * y)


@dataclass(frozen=True)
class NavigationPath:
    """Fixed arc-length parameterised route through the intersection.

    ``s = 0`` is the spawn point, ``arm_length`` from the box edge;
    ``s = total_length`` is a full arm length beyond the box exit.
    """

    entry_arm: Arm
    maneuver: Maneuver
    layout: IntersectionLayout
    segments: tuple = field(repr=False)
    total_length: float
    s_box_exit: float  # arc position where the centre crosses the exit edge
    exit_arm: Arm

    def pose(self, s: float) -> tuple[float, float, float]:
        """(x, y, heading) of the path point at arc position ``s`` (clamped)."""
        s = min(max(s, 0.0), self.total_length)
        for seg in self.segments:
            if s <= seg.length:
                return seg.pose(s)
            s -= seg.length
        return self.segments[-1].pose(self.segments[-1].length)


def build_path(arm: Arm, maneuver: Maneuver,
               layout: IntersectionLayout) -> NavigationPath:
    """Construct the route entering from ``arm`` performing ``maneuver``."""
    half = layout.box_half_width
    off = layout.lane_offset
    spawn_y = half + layout.arm_length

    # North-entry template (heading south along x = +off), rotated per arm.
    entry = _Straight(off, spawn_y, -math.pi / 2.0, layout.arm_length)
    if maneuver is Maneuver.STRAIGHT:
        inner: _Straight | _Arc = _Straight(off, half, -math.pi / 2.0, 2.0 * half)
        exit_heading = -math.pi / 2.0
        exit_start = (off, -half)
        exit_arm_value = (arm.value + 2) % 4
    elif maneuver is Maneuver.TURN_LEFT:
        # Near-side quarter circle hugging the box corner on the driver's left.
        inner = _Arc(half, half, half - off, math.pi, math.pi / 2.0)
        exit_heading = 0.0
        exit_start = (half, off)
        exit_arm_value = (arm.value + 1) % 4
    else:
        # Far-side quarter circle crossing the oncoming lanes.
        inner = _Arc(-half, half, half + off, 0.0, -math.pi / 2.0)
        exit_heading = math.pi
        exit_start = (-half, -off)
        exit_arm_value = (arm.value + 3) % 4
    exit_seg = _Straight(exit_start[0], exit_start[1], exit_heading,
                         layout.exit_overhang)

    rot = -arm.value * math.pi / 2.0  # North template -> requested arm
    segments = []
    for seg in (entry, inner, exit_seg):
        if isinstance(seg, _Straight):
            x, y = _rotate((seg.x0, seg.y0), rot)
            segments.append(_Straight(x, y, seg.heading + rot, seg.length))
        else:
            cx, cy = _rotate((seg.cx, seg.cy), rot)
            segments.append(_Arc(cx, cy, seg.radius, seg.phi0 + rot, seg.sweep))

    inbox_length = segments[1].length
    total = layout.arm_length + inbox_length + layout.exit_overhang
    return NavigationPath(
        entry_arm=arm,
        maneuver=maneuver,
        layout=layout,
        segments=tuple(segments),
        total_length=total,
        s_box_exit=layout.arm_length + inbox_length,
        exit_arm=Arm(exit_arm_value),
    )


@dataclass(frozen=True)
class DiskSet:
    """Three equal disks whose union covers a vehicle rectangle."""

    centers: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    radius: float


def occupancy_disks(pose: tuple[float, float, float], length: float,
                    width: float) -> DiskSet:
    """Over-approximate a rectangle at ``pose`` by three disks.

    Centres sit at longitudinal offsets -L/3, 0, +L/3; the shared radius
    sqrt((L/6)^2 + (W/2)^2) makes the union cover the rectangle exactly at
    the corners.
    """
    if length <= 0 or width <= 0:
        raise ValueError("vehicle dimensions must be positive")
    x, y, heading = pose
    dx, dy = math.cos(heading), math.sin(heading)
    step = length / 3.0
    centers = (
        (x - step * dx, y - step * dy),
        (x, y),
        (x + step * dx, y + step * dy),
    )
    radius = math.hypot(length / 6.0, width / 2.0)
    return DiskSet(centers=centers, radius=radius)


def disk_set_distance(a: DiskSet, b: DiskSet) -> float:
    """Minimum clearance between two disk unions (0 when they touch)."""
    best = math.inf
    rr = a.radius + b.radius
    for ax, ay in a.centers:
        for bx, by in b.centers:
            gap = math.hypot(ax - bx, ay - by) - rr
            if gap < best:
                best = gap
    return max(0.0, best)


def paths_conflict(p: NavigationPath, q: NavigationPath) -> bool:
    """Whether two routes can collide.

    Routes are exempt only when they enter from opposite arms and both go
    straight or turn left; every other combination crosses.
    """
    if p.entry_arm is q.entry_arm:
        raise ValueError("paths_conflict requires distinct entry arms")
    if opposite(p.entry_arm) is not q.entry_arm:
        return True
    benign = (Maneuver.STRAIGHT, Maneuver.TURN_LEFT)
    return not (p.maneuver in benign and q.maneuver in benign)


def rectangle_corners(pose: tuple[float, float, float], length: float,
                      width: float) -> list[tuple[float, float]]:
    x, y, heading = pose
    dx, dy = math.cos(heading), math.sin(heading)
    nx, ny = -dy, dx
    hl, hw = length / 2.0, width / 2.0
    return [
        (x + sx * hl * dx + sy * hw * nx, y + sx * hl * dy + sy * hw * ny)
        for sx in (-1.0, 1.0)
        for sy in (-1.0, 1.0)
    ]


def rectangle_intersects_box(pose: tuple[float, float, float], length: float,
                             width: float, layout: IntersectionLayout) -> bool:
    """Separating-axis test between the vehicle rectangle and the centre box."""
    half = layout.box_half_width
    corners = rectangle_corners(pose, length, width)
    xs = [c[0] for c in corners]
    ys = [c[1] for c in corners]
    if min(xs) > half or max(xs) < -half or min(ys) > half or max(ys) < -half:
        return False
    # Box corners projected on the rectangle's own axes.
    x, y, heading = pose
    dx, dy = math.cos(heading), math.sin(heading)
    for ax, ay, extent in ((dx, dy, length / 2.0), (-dy, dx, width / 2.0)):
        centre = x * ax + y * ay
        projections = [bx * ax + by * ay
                       for bx in (-half, half) for by in (-half, half)]
        if min(projections) > centre + extent or max(projections) < centre - extent:
            return False
    return True
