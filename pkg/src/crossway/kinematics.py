"""Vehicle state, the one-step motion update, and acceleration inference."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from .geometry import (
    IntersectionLayout,
    NavigationPath,
    rectangle_intersects_box,
)

#: Deceleration value reported for a vehicle observed braking to a stop.
BRAKE_ACCEL = -50.0

_STOP_PROFILE_TOL = 1e-9


class Status(IntEnum):
    """Progress through the intersection; only ever advances."""

    ENTERING = 0
    INSIDE = 1
    LEAVING = 2


@dataclass(frozen=True)
class VehicleDims:
    length: float
    width: float


@dataclass(frozen=True)
class Configuration:
    """Kinematic snapshot of one vehicle along its fixed path.

    ``a`` is the input applied over the step that produced this state.
    """

    s: float
    x: float
    y: float
    heading: float
    v: float
    a: float
    status: Status


def config_at(path: NavigationPath, s: float, v: float, dims: VehicleDims,
              layout: IntersectionLayout, a: float = 0.0) -> Configuration:
    """Build a consistent configuration at arc position ``s``."""
    x, y, heading = path.pose(s)
    cfg = Configuration(s=s, x=x, y=y, heading=heading, v=v, a=a,
                        status=Status.ENTERING)
    status = update_status(cfg, path, dims, layout)
    return Configuration(s=s, x=x, y=y, heading=heading, v=v, a=a,
                         status=status)


def update_status(c: Configuration, path: NavigationPath, dims: VehicleDims,
                  layout: IntersectionLayout) -> Status:
    """Classify the vehicle as entering / inside / leaving.

    Leaving once the rectangle centre has crossed the box edge on the exit
    side; entering while the rectangle has no overlap with the box.  The
    result never moves backwards relative to ``c.status``.
    """
    if c.status is Status.LEAVING:
        return Status.LEAVING
    if c.s > path.s_box_exit:
        return Status.LEAVING
    if rectangle_intersects_box((c.x, c.y, c.heading), dims.length,
                                dims.width, layout):
        return Status(max(c.status, Status.INSIDE))
    return c.status if c.status is Status.INSIDE else Status.ENTERING


def next_config(c: Configuration, a: float, dt: float, path: NavigationPath,
                dims: VehicleDims, layout: IntersectionLayout) -> Configuration:
    """Advance one step at constant acceleration, never reversing.

    A braking vehicle stops at v = 0 and stays there; the arc position is
    clamped at the path end once the vehicle has left the scene.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v_next = c.v + a * dt
    if v_next >= 0.0:
        ds = c.v * dt + 0.5 * a * dt * dt
    else:
        t_stop = c.v / -a
        ds = c.v * t_stop + 0.5 * a * t_stop * t_stop
        v_next = 0.0
    s_next = min(c.s + ds, path.total_length)
    x, y, heading = path.pose(s_next)
    moved = Configuration(s=s_next, x=x, y=y, heading=heading, v=v_next, a=a,
                          status=c.status)
    status = update_status(moved, path, dims, layout)
    return Configuration(s=s_next, x=x, y=y, heading=heading, v=v_next, a=a,
                         status=status)


def infer_acceleration(prev: Configuration, cur: Configuration,
                       dt: float) -> float:
    """Acceleration that explains the observed transition.

    Plain difference quotient, except that a vehicle seen braking to a
    standstill whose travelled distance matches the hard-braking stop
    profile reports the commanded deceleration instead of the (shallower)
    average slope.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if cur.v == 0.0 and prev.v > 0.0:
        stop_ds = prev.v * prev.v / (2.0 * -BRAKE_ACCEL)
        if abs((cur.s - prev.s) - stop_ds) <= _STOP_PROFILE_TOL:
            return BRAKE_ACCEL
    return (cur.v - prev.v) / dt


def observed_input(prev: Configuration, cur: Configuration, dt: float) -> float:
    """Canonical observable acceleration for prediction comparisons.

    Routes the transition through :func:`infer_acceleration` so that, e.g.,
    a stopped vehicle commanded -50 is indistinguishable from one commanded
    0, exactly as it is to an outside observer.
    """
    return infer_acceleration(prev, cur, dt)
