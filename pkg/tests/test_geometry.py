"""Geometry tests: analytic oracles for frustum and swept-collision behaviour,
plus group-structure properties of SE(2) poses."""

from __future__ import annotations

import math

import numpy as np
import pytest

from intentsim.geometry import (
    Box,
    Circle,
    Frustum,
    Pose2,
    compose,
    footprint_distance,
    in_frustum,
    inverse,
    normalize_angle,
    polyline_length,
    swept_collision,
)


def random_pose(rng: np.random.Generator) -> Pose2:
    return Pose2(
        float(rng.uniform(-10, 10)),
        float(rng.uniform(-10, 10)),
        float(rng.uniform(-4 * math.pi, 4 * math.pi)),
    )


class TestPose2:
    def test_identity_compose(self):
        p = Pose2(1.5, -2.0, 0.7)
        q = compose(Pose2(), p)
        assert q.x == pytest.approx(p.x)
        assert q.y == pytest.approx(p.y)
        assert q.theta == pytest.approx(p.theta)

    def test_quarter_turn_moves_local_x_to_world_y(self):
        q = compose(Pose2(1, 0, math.pi / 2), Pose2(1, 0, 0))
        assert q.x == pytest.approx(1.0)
        assert q.y == pytest.approx(1.0)
        assert q.theta == pytest.approx(math.pi / 2)

    def test_compose_inverse_is_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            p = random_pose(rng)
            ident = compose(p, inverse(p))
            assert abs(ident.x) < 1e-9
            assert abs(ident.y) < 1e-9
            assert abs(normalize_angle(ident.theta)) < 1e-9

    def test_associativity(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            a, b, c = (random_pose(rng) for _ in range(3))
            left = compose(compose(a, b), c)
            right = compose(a, compose(b, c))
            assert left.x == pytest.approx(right.x, abs=1e-9)
            assert left.y == pytest.approx(right.y, abs=1e-9)
            assert normalize_angle(left.theta - right.theta) == pytest.approx(0.0, abs=1e-9)

    def test_theta_normalized_to_half_open_interval(self):
        assert Pose2(0, 0, math.pi).theta == pytest.approx(math.pi)
        assert Pose2(0, 0, -math.pi).theta == pytest.approx(math.pi)
        assert Pose2(0, 0, 3 * math.pi).theta == pytest.approx(math.pi)
        assert Pose2(0, 0, 2 * math.pi).theta == pytest.approx(0.0, abs=1e-12)


class TestShapes:
    def test_extents_must_be_positive(self):
        with pytest.raises(ValueError):
            Circle(0.0)
        with pytest.raises(ValueError):
            Box(1.0, 0.0)
        with pytest.raises(ValueError):
            Circle(0.2, height=-0.1)

    def test_footprint_distance_circle(self):
        assert footprint_distance(3.0, 0.0, Pose2(), Circle(1.0)) == pytest.approx(2.0)
        assert footprint_distance(0.5, 0.0, Pose2(), Circle(1.0)) == 0.0

    def test_footprint_distance_rotated_box(self):
        # Unit square rotated 45 degrees: corner now points along +x at sqrt(2)/2.
        pose = Pose2(0, 0, math.pi / 4)
        box = Box(0.5, 0.5)
        d = footprint_distance(2.0, 0.0, pose, box)
        assert d == pytest.approx(2.0 - math.sqrt(2) / 2, abs=1e-9)


class TestInFrustum:
    FRUSTUM = Frustum(half_angle=math.radians(60), range=6.0, gaze_depression=math.radians(30))

    def test_tall_body_ahead_visible_at_any_gaze(self):
        body = Circle(0.35, height=1.2)
        for gaze_deg in (1, 10, 30, 50):
            f = Frustum(math.radians(60), 6.0, math.radians(gaze_deg))
            # 2 m directly ahead; 1.2 m tall body needs only atan(0.4/2)=11.3 deg,
            # but heights >= eye pass unconditionally, so use a taller body too.
            tall = Circle(0.35, height=1.7)
            assert in_frustum(Pose2(), 1.6, f, Pose2(2, 0, 0), tall)

    def test_body_behind_observer_invisible(self):
        body = Circle(0.35, height=1.7)
        assert not in_frustum(Pose2(), 1.6, self.FRUSTUM, Pose2(-2, 0, 0), body)

    def test_gaze_threshold_matches_analytic_depression(self):
        # Oracle: eye 1.6 m, ball top 0.15 m, planar distance 2.0 m.
        required = math.atan2(1.6 - 0.15, 2.0)
        assert math.degrees(required) == pytest.approx(35.94, abs=0.01)
        ball = Circle(0.15, height=0.15)
        f30 = Frustum(math.radians(60), 6.0, math.radians(30))
        f50 = Frustum(math.radians(60), 6.0, math.radians(50))
        assert not in_frustum(Pose2(), 1.6, f30, Pose2(2, 0, 0), ball)
        assert in_frustum(Pose2(), 1.6, f50, Pose2(2, 0, 0), ball)

    def test_zero_distance_visible_by_convention(self):
        ball = Circle(0.15, height=0.15)
        f = Frustum(math.radians(10), 1.0, math.radians(1))
        assert in_frustum(Pose2(1, 1, 0.5), 1.6, f, Pose2(1, 1, 2.0), ball)

    def test_out_of_range_invisible(self):
        body = Circle(0.35, height=1.7)
        assert not in_frustum(Pose2(), 1.6, self.FRUSTUM, Pose2(6.5, 0, 0), body)

    def test_monotone_in_gaze_depression(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            obs = random_pose(rng)
            body = Circle(float(rng.uniform(0.05, 0.5)), height=float(rng.uniform(0.0, 1.5)))
            pose = random_pose(rng)
            g1, g2 = sorted(rng.uniform(0.0, math.pi / 2 - 1e-3, size=2))
            f1 = Frustum(math.radians(60), 8.0, float(g1))
            f2 = Frustum(math.radians(60), 8.0, float(g2))
            if in_frustum(obs, 1.6, f1, pose, body):
                assert in_frustum(obs, 1.6, f2, pose, body)

    def test_monotone_in_half_angle_and_range(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            obs = random_pose(rng)
            body = Circle(0.2, height=1.0)
            pose = random_pose(rng)
            a1, a2 = sorted(rng.uniform(0.05, math.pi, size=2))
            r1, r2 = sorted(rng.uniform(0.5, 15.0, size=2))
            narrow = Frustum(float(a1), float(r1), math.radians(40))
            wide = Frustum(float(a2), float(r2), math.radians(40))
            if in_frustum(obs, 1.6, narrow, pose, body):
                assert in_frustum(obs, 1.6, wide, pose, body)


class TestSweptCollision:
    def test_straight_path_hits_ball_at_analytic_arc_length(self):
        # Oracle: overlap begins when separation < 0.30 + 0.15, i.e. 0.45 m
        # before the ball centre 2 m along the path.
        path = [Pose2(0, 0, 0), Pose2(0, 4, 0)]
        step = 0.05
        hit = swept_collision(path, Circle(0.30), [(Pose2(0, 2, 0), Circle(0.15))], step=step)
        assert hit is not None
        arc, idx = hit
        assert idx == 0
        assert arc == pytest.approx(1.55, abs=step)

    def test_lateral_clearance_no_hit(self):
        path = [Pose2(0, 0, 0), Pose2(0, 4, 0)]
        hit = swept_collision(path, Circle(0.30), [(Pose2(2, 2, 0), Circle(0.15))])
        assert hit is None

    def test_single_pose_overlapping_reports_zero_arc(self):
        hit = swept_collision([Pose2(0, 0, 0)], Circle(0.30), [(Pose2(0.1, 0, 0), Circle(0.15))])
        assert hit == (0.0, 0)

    def test_empty_path_is_an_error(self):
        with pytest.raises(ValueError, match="empty path"):
            swept_collision([], Circle(0.3), [])

    def test_non_circle_mover_rejected(self):
        with pytest.raises(ValueError):
            swept_collision([Pose2()], Box(0.3, 0.3), [])

    def test_step_refinement_never_flips_outcome(self):
        # Fixtures with clearance >= step: halving the step may sharpen the arc
        # length but never changes hit/no-hit.
        rng = np.random.default_rng(5)
        for _ in range(100):
            path = [Pose2(0, 0, 0), Pose2(float(rng.uniform(2, 5)), float(rng.uniform(-1, 1)), 0)]
            obstacle = (
                Pose2(float(rng.uniform(0, 4)), float(rng.uniform(-2, 2)), 0),
                Circle(float(rng.uniform(0.1, 0.4))),
            )
            coarse = swept_collision(path, Circle(0.3), [obstacle], step=0.08)
            fine = swept_collision(path, Circle(0.3), [obstacle], step=0.04)
            assert (coarse is None) == (fine is None)
            if coarse is not None and fine is not None:
                assert abs(coarse[0] - fine[0]) <= 0.08

    def test_box_obstacle(self):
        path = [Pose2(-3, 0, 0), Pose2(3, 0, 0)]
        hit = swept_collision(path, Circle(0.3), [(Pose2(0, 0, 0), Box(0.5, 0.5))], step=0.05)
        assert hit is not None
        arc, _ = hit
        # Contact when the disc edge reaches x = -0.5, i.e. centre at -0.8.
        assert arc == pytest.approx(2.2, abs=0.05)


def test_polyline_length():
    assert polyline_length([Pose2(0, 0, 0), Pose2(3, 4, 0)]) == pytest.approx(5.0)
    assert polyline_length([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]) == pytest.approx(2.0)
