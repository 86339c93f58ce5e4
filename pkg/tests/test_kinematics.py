import math

import numpy as np
import pytest

from crossway.geometry import Arm, IntersectionLayout, Maneuver, build_path
from crossway.kinematics import (
    Configuration,
    Status,
    VehicleDims,
    config_at,
    infer_acceleration,
    next_config,
    update_status,
)

LAYOUT = IntersectionLayout()
PATH = build_path(Arm.NORTH, Maneuver.STRAIGHT, LAYOUT)
DIMS = VehicleDims(length=4.5, width=1.8)
DT = 0.1


def cfg(s: float, v: float, status=None) -> Configuration:
    c = config_at(PATH, s, v, DIMS, LAYOUT)
    if status is not None:
        c = Configuration(s=c.s, x=c.x, y=c.y, heading=c.heading, v=c.v,
                          a=c.a, status=status)
    return c


class TestNextConfig:
    def test_uniform_motion(self):
        c = next_config(cfg(5.0, 10.0), 0.0, DT, PATH, DIMS, LAYOUT)
        assert c.s - 5.0 == pytest.approx(1.0, rel=1e-12)
        assert c.v == 10.0
        assert c.a == 0.0

    def test_constant_acceleration(self):
        c = next_config(cfg(5.0, 2.0), 10.0, DT, PATH, DIMS, LAYOUT)
        assert c.v == pytest.approx(3.0, rel=1e-12)
        assert c.s - 5.0 == pytest.approx(0.25, rel=1e-12)

    def test_hard_braking_stops_at_zero(self):
        c = next_config(cfg(5.0, 2.0), -50.0, DT, PATH, DIMS, LAYOUT)
        assert c.v == 0.0
        assert c.s - 5.0 == pytest.approx(0.04, rel=1e-12)

    def test_never_reverses(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            v0 = rng.uniform(0.0, 20.0)
            a = rng.uniform(-80.0, 30.0)
            c = next_config(cfg(10.0, v0), a, DT, PATH, DIMS, LAYOUT)
            assert c.v >= 0.0
            assert c.s >= 10.0

    def test_clamps_at_path_end(self):
        c = next_config(cfg(PATH.total_length - 0.1, 10.0), 0.0, DT, PATH,
                        DIMS, LAYOUT)
        assert c.s == PATH.total_length
        assert c.v == 10.0

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            next_config(cfg(0.0, 1.0), 0.0, 0.0, PATH, DIMS, LAYOUT)


class TestUpdateStatus:
    def test_far_from_box_is_entering(self):
        # Rectangle 5 m short of the box edge.
        s = LAYOUT.arm_length - 5.0 - DIMS.length / 2.0
        assert cfg(s, 0.0).status is Status.ENTERING

    def test_center_of_box_is_inside(self):
        s = LAYOUT.arm_length + LAYOUT.box_half_width
        assert cfg(s, 0.0).status is Status.INSIDE

    def test_just_past_exit_is_leaving(self):
        assert cfg(PATH.s_box_exit + 0.1, 5.0).status is Status.LEAVING

    def test_on_exit_edge_not_yet_leaving(self):
        assert cfg(PATH.s_box_exit - 1e-9, 5.0).status is Status.INSIDE

    def test_leaving_is_sticky(self):
        c = cfg(5.0, 1.0, status=Status.LEAVING)
        assert update_status(c, PATH, DIMS, LAYOUT) is Status.LEAVING

    def test_monotone_along_trajectory(self):
        rng = np.random.default_rng(3)
        c = cfg(0.0, 0.0)
        seen = [c.status]
        for _ in range(400):
            a = float(rng.choice([-50.0, 0.0, 10.0, 20.0]))
            c = next_config(c, a, DT, PATH, DIMS, LAYOUT)
            seen.append(c.status)
        assert all(b >= a for a, b in zip(seen, seen[1:]))
        assert seen[-1] is Status.LEAVING


class TestInferAcceleration:
    def test_difference_quotient(self):
        a = infer_acceleration(cfg(0.0, 10.0), cfg(1.05, 11.0), DT)
        assert a == pytest.approx(10.0, rel=1e-9)

    def test_zero_change(self):
        assert infer_acceleration(cfg(0.0, 10.0), cfg(1.0, 10.0), DT) == 0.0

    def test_stop_profile_reports_commanded_deceleration(self):
        prev = cfg(5.0, 2.0)
        cur = next_config(prev, -50.0, DT, PATH, DIMS, LAYOUT)
        assert cur.s - prev.s == pytest.approx(0.04)
        assert infer_acceleration(prev, cur, DT) == -50.0

    def test_partial_stop_not_reported_as_hard_brake(self):
        # Stopping with a gentler profile falls back to the quotient.
        prev = cfg(5.0, 2.0)
        cur = cfg(5.0 + 0.1, 0.0)  # ds=0.1 does not match 2^2/100
        assert infer_acceleration(prev, cur, DT) == pytest.approx(-20.0)

    def test_round_trip_identity(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            v0 = rng.uniform(0.0, 18.0)
            a = rng.uniform(-v0 / DT, 25.0)
            prev = cfg(3.0, v0)
            cur = next_config(prev, a, DT, PATH, DIMS, LAYOUT)
            if prev.v + a * DT >= 0.0:
                assert infer_acceleration(prev, cur, DT) == pytest.approx(
                    a, abs=1e-9)
