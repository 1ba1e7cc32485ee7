"""Consequence-engine tests: subjective grids against analytic visibility,
intention enactment outcomes in the two-metre scene, intervention checks, and
the detachment/purity invariants."""

from __future__ import annotations

import math
from dataclasses import replace

import pytest

from intentsim.config import Config
from intentsim.consequence import (
    ConsequenceEngine,
    IntentionRecord,
    SimOutcome,
    SimulationHorizonError,
)
from intentsim.geometry import Pose2
from intentsim.navigation import Path, Unreachable

PERSON, ROBOT, BALL, COUCH, DOOR = 2, 1, 3, 4, 5


@pytest.fixture(scope="module")
def engine(cfg):
    return ConsequenceEngine(cfg)


def couch_intent(gaze_deg: float) -> IntentionRecord:
    return IntentionRecord(subject=PERSON, target=COUCH, gaze=math.radians(gaze_deg))


def risky_couch_intent(engine, snap, gaze_deg: float) -> IntentionRecord:
    out = engine.simulate_intention(snap, couch_intent(gaze_deg))
    assert out.c
    return IntentionRecord(
        subject=PERSON, target=COUCH, gaze=math.radians(gaze_deg), c=True,
        collision_time=out.collision_time, collision_xy=out.collision_xy,
    )


class TestSubjectiveGrid:
    def ball_cells_occupied(self, grid, snap) -> bool:
        ball = snap.nodes[BALL]
        ix, iy = grid.cell_of(ball.attrs["x"], ball.attrs["y"])
        return not grid.free(ix, iy)

    def test_ball_occupied_when_gaze_admits_it(self, engine, twometre_wm):
        # Analytic: ball-top depression at 2 m is 35.9 deg, below a 50 deg gaze.
        snap = twometre_wm.snapshot()
        grid = engine.subjective_grid(snap, PERSON, math.radians(50), target_id=COUCH)
        assert self.ball_cells_occupied(grid, snap)

    def test_ball_absent_at_shallow_gaze(self, engine, twometre_wm):
        snap = twometre_wm.snapshot()
        grid = engine.subjective_grid(snap, PERSON, math.radians(10), target_id=COUCH)
        assert not self.ball_cells_occupied(grid, snap)

    def test_hypothesized_robot_occupied_at_any_gaze(self, engine, twometre_wm):
        # The robot body is eye height, so the tall-body rule admits it at
        # every sampled gaze once it is inside the horizontal sector.
        snap = twometre_wm.snapshot()
        ahead = Pose2(3.4, 3.0, 0.0)
        for gaze_deg in (10, 30, 50):
            grid = engine.subjective_grid(
                snap, PERSON, math.radians(gaze_deg),
                hypothesized_robot=ahead, target_id=COUCH)
            ix, iy = grid.cell_of(ahead.x, ahead.y)
            assert not grid.free(ix, iy)

    def test_target_excluded_from_occupancy(self, engine, twometre_wm):
        snap = twometre_wm.snapshot()
        grid = engine.subjective_grid(snap, PERSON, math.radians(50), target_id=COUCH)
        couch = snap.nodes[COUCH]
        ix, iy = grid.cell_of(couch.attrs["x"], couch.attrs["y"])
        assert grid.free(ix, iy)

    def test_missing_person_is_an_error(self, engine, twometre_wm):
        with pytest.raises(ValueError, match="person"):
            engine.subjective_grid(twometre_wm.snapshot(), 77, math.radians(30))


class TestSimulateIntention:
    def test_blind_gaze_collides_on_direct_segment(self, engine, twometre_wm):
        # Contact at arc 1.55 m (separation 0.45 before the ball centre 2 m
        # out), so the collision time is about 1.55 / 0.5 = 3.1 s.
        out = engine.simulate_intention(twometre_wm.snapshot(), couch_intent(20))
        assert out.c is True
        assert out.collided_with == BALL
        assert out.collision_time == pytest.approx(3.1, abs=0.1)
        assert out.collision_xy[0] == pytest.approx(3.55, abs=0.1)

    def test_seeing_gaze_detours_clear(self, engine, twometre_wm):
        out = engine.simulate_intention(twometre_wm.snapshot(), couch_intent(50))
        assert out.c is False
        assert out.arrived
        assert isinstance(out.planned_path, Path)

    def test_hypothesized_robot_cancels_collision(self, engine, twometre_wm):
        out = engine.simulate_intention(
            twometre_wm.snapshot(), couch_intent(20),
            hypothesized_robot=Pose2(3.75, 3.0, 0.0))
        assert out.c is False
        assert out.arrived

    def test_unreachable_goal_is_no_risk(self, engine, twometre_wm):
        # A hypothesized robot parked on the couch standoff walls the goal off.
        out = engine.simulate_intention(
            twometre_wm.snapshot(), couch_intent(20),
            hypothesized_robot=Pose2(5.65, 3.0, 0.0))
        assert out.c is False
        assert not out.reachable
        assert isinstance(out.planned_path, Unreachable)

    def test_horizon_cap_raises(self, twometre_wm, cfg):
        from dataclasses import replace as dc_replace
        tight = dc_replace(cfg, world=dc_replace(cfg.world, sim_horizon_s=1.0))
        engine = ConsequenceEngine(tight)
        with pytest.raises(SimulationHorizonError, match="simulation horizon exceeded"):
            engine.simulate_intention(twometre_wm.snapshot(), couch_intent(20))

    def test_collision_time_consistency(self, engine, twometre_wm, cfg):
        from intentsim.geometry import polyline_length
        out = engine.simulate_intention(twometre_wm.snapshot(), couch_intent(10))
        assert out.c
        arc = polyline_length(out.trajectory)
        tick_arc = cfg.person.speed_mps * cfg.world.dt
        assert out.collision_time == pytest.approx(arc / cfg.person.speed_mps, abs=tick_arc * 2)


class TestCoSimulate:
    def test_parking_at_ball_cancels(self, engine, twometre_wm):
        snap = twometre_wm.snapshot()
        pi = risky_couch_intent(engine, snap, 20)
        out = engine.co_simulate(snap, IntentionRecord(subject=ROBOT, target=BALL), pi)
        assert out.admissible is True
        assert out.c is False
        assert out.arrived
        assert out.robot_goal is not None

    def test_parking_at_door_leaves_corridor_risky(self, engine, twometre_wm):
        # Give the check a generous deadline so the re-simulation itself, not
        # the admissibility gate, decides the outcome.
        snap = twometre_wm.snapshot()
        pi = replace(risky_couch_intent(engine, snap, 20), collision_time=30.0)
        out = engine.co_simulate(snap, IntentionRecord(subject=ROBOT, target=DOOR), pi)
        assert out.admissible is True
        assert out.c is True

    def test_too_distant_robot_inadmissible(self, engine, twometre_wm):
        snap = twometre_wm.snapshot()
        pi = replace(risky_couch_intent(engine, snap, 20), collision_time=0.2)
        out = engine.co_simulate(snap, IntentionRecord(subject=ROBOT, target=BALL), pi)
        assert out.admissible is False
        assert out.c is True
        assert out.robot_arrival_s is not None

    def test_trace_hook_records_simulations(self, cfg, twometre_wm):
        records = []
        engine = ConsequenceEngine(cfg, trace=records.append)
        snap = twometre_wm.snapshot()
        pi = risky_couch_intent(engine, snap, 20)
        engine.co_simulate(snap, IntentionRecord(subject=ROBOT, target=BALL), pi)
        kinds = [r["kind"] for r in records]
        assert "simulate_intention" in kinds
        assert "co_simulate" in kinds
        assert all("trajectory" in r and "c" in r for r in records)


class TestDetachment:
    def test_no_simulation_commits_to_memory(self, engine, twometre_wm):
        before = twometre_wm.version
        snap = twometre_wm.snapshot()
        pi = risky_couch_intent(engine, snap, 20)
        engine.simulate_intention(snap, couch_intent(50))
        engine.co_simulate(snap, IntentionRecord(subject=ROBOT, target=BALL), pi)
        assert twometre_wm.version == before

    def test_repeat_runs_identical(self, engine, twometre_wm):
        snap = twometre_wm.snapshot()
        pi = risky_couch_intent(engine, snap, 20)
        a = engine.co_simulate(snap, IntentionRecord(subject=ROBOT, target=BALL), pi)
        b = engine.co_simulate(snap, IntentionRecord(subject=ROBOT, target=BALL), pi)
        assert a.c == b.c
        assert a.collision_time == b.collision_time
        assert [(p.x, p.y) for p in a.trajectory] == [(p.x, p.y) for p in b.trajectory]
