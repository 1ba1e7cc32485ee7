"""Batch experiment harness: seeded episodes over resampled scenarios, a
ground-truth labelling replay, the confusion-matrix metric suite, and result
persistence as a CSV of episode rows plus a text report."""

from __future__ import annotations

import csv
import logging
import math
import statistics
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .agents import ActionCommitHook, AtmAgents, RobotExecutive, sweep_once
from .config import Config
from .consequence import ConsequenceEngine, TraceHook
from .geometry import Circle, Frustum, Pose2
from .memory import WorkingMemory, dump
from .navigation import GridBounds
from .perception import NoiseModel, observe, publish
from .person import GazeLimitedWalker, SceneBody
from .world import (
    Entity,
    Scenario,
    ScriptedPerson,
    WALL_ID,
    WorldState,
    initial_state,
    sample_scenario,
    step,
)

log = logging.getLogger(__name__)


@dataclass
class EpisodeResult:
    seed: int
    discarded: bool
    truth_collision: bool | None
    predicted_risky: bool | None
    action_found: bool | None
    reaction_time: float | None
    selected_target: int | None
    final_person_collided: bool | None


@dataclass
class MetricsReport:
    total: int
    discarded: int
    valid: int
    accuracy: float
    fp_rate: float
    fn_rate: float
    precision: float
    recall: float
    f1: float
    f2: float
    reaction_mean: float | None
    reaction_std: float | None
    detected_and_action_rate: float


def f_beta(precision: float, recall: float, beta: float) -> float:
    denominator = beta * beta * precision + recall
    if denominator == 0.0:
        return 0.0
    return (1 + beta * beta) * precision * recall / denominator


def compute_metrics(results: list[EpisodeResult]) -> MetricsReport:
    """Confusion counts over valid (non-discarded) episodes and the derived
    rate metrics; rates use the valid-episode denominator."""
    valid = [r for r in results if not r.discarded]
    if not valid:
        raise ValueError("no valid episodes to compute metrics over")
    tp = sum(1 for r in valid if r.truth_collision and r.predicted_risky)
    fp = sum(1 for r in valid if not r.truth_collision and r.predicted_risky)
    fn = sum(1 for r in valid if r.truth_collision and not r.predicted_risky)
    tn = sum(1 for r in valid if not r.truth_collision and not r.predicted_risky)
    n = len(valid)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    reactions = [r.reaction_time for r in valid if r.reaction_time is not None]
    predicted = [r for r in valid if r.predicted_risky]
    with_action = sum(1 for r in predicted if r.action_found)
    return MetricsReport(
        total=len(results),
        discarded=len(results) - n,
        valid=n,
        accuracy=(tp + tn) / n,
        fp_rate=fp / n,
        fn_rate=fn / n,
        precision=precision,
        recall=recall,
        f1=f_beta(precision, recall, 1.0),
        f2=f_beta(precision, recall, 2.0),
        reaction_mean=statistics.fmean(reactions) if reactions else None,
        reaction_std=statistics.pstdev(reactions) if reactions else None,
        detected_and_action_rate=with_action / len(predicted) if predicted else 0.0,
    )


def _true_walker(scenario: Scenario, cfg: Config) -> GazeLimitedWalker:
    script = scenario.person_script
    assert isinstance(script, ScriptedPerson)
    person = scenario.person
    target = scenario.entity(script.target_id)
    gaze_deg = script.gaze_deg if script.gaze_deg is not None else cfg.person.gaze_deg
    assert isinstance(person.shape, Circle)
    return GazeLimitedWalker(
        body_radius=person.shape.radius,
        speed=script.speed,
        frustum=Frustum(
            half_angle=math.radians(cfg.person.half_angle_deg),
            range=cfg.person.range_m,
            gaze_depression=math.radians(gaze_deg),
        ),
        eye_height=person.eye_height if person.eye_height is not None else cfg.person.eye_height_m,
        clearance_margin=cfg.person.margin_m,
        target_id=target.id,
        target_pose=target.pose,
        target_shape=target.shape,
        nav=cfg.nav,
        bounds=GridBounds(0.0, 0.0, scenario.room_width, scenario.room_depth),
        standoff_gap=cfg.world.standoff_gap_m,
        move_eps=cfg.person.replan_move_eps_m,
        decel=cfg.person.accel_limit,
    )


def _person_bodies(state: WorldState, person_id: int) -> list[SceneBody]:
    return [
        SceneBody(e.id, e.pose, e.shape)
        for eid, e in sorted(state.entities.items())
        if eid != person_id
    ]


def _person_collided(state: WorldState, person_id: int, target_id: int) -> bool:
    """Any true collision event involving the person, other than brushing the
    walls or arriving at their own target."""
    for _, a, b in state.collision_events:
        if person_id not in (a, b):
            continue
        other = b if a == person_id else a
        if other in (WALL_ID, target_id):
            continue
        return True
    return False


def run_truth(scenario: Scenario, cfg: Config) -> bool:
    """Zero-noise, no-intervention replay of the scripted person; returns
    whether the walk collides with anything but their target."""
    script = scenario.person_script
    assert isinstance(script, ScriptedPerson)
    person_id = scenario.person.id
    walker = _true_walker(scenario, cfg)
    state = initial_state(scenario, cfg.world.dt)
    max_ticks = int(round(cfg.world.episode_timeout_s / cfg.world.dt))
    for _ in range(max_ticks):
        bodies = _person_bodies(state, person_id)
        cmd = walker.command(state.entities[person_id].pose, bodies, cfg.world.dt)
        state = step(state, {person_id: cmd}, cfg.world.dt)
        if walker.arrived:
            break
        if _person_collided(state, person_id, script.target_id):
            break
    return _person_collided(state, person_id, script.target_id)


@dataclass
class LiveOutcome:
    state: WorldState
    wm: WorkingMemory
    agents: AtmAgents
    intentions_committed: bool
    predicted_risky: bool
    action_found: bool
    reaction_time: float | None
    selected_target: int | None
    final_person_collided: bool
    person_arrived: bool


def run_live(
    scenario: Scenario,
    cfg: Config,
    noise: NoiseModel,
    audit: ActionCommitHook | None = None,
    trace: TraceHook | None = None,
    wm_dump_hook=None,
) -> LiveOutcome:
    """Full pipeline on one scenario: perceive, guess intentions periodically,
    select an action on risk, and drive the robot while the person walks."""
    script = scenario.person_script
    assert isinstance(script, ScriptedPerson)
    robot = scenario.robot
    person_id = scenario.person.id
    assert isinstance(robot.shape, Circle)

    wm = WorkingMemory()
    engine = ConsequenceEngine(cfg, trace=trace)
    agents = AtmAgents(wm, cfg, engine)
    executive = RobotExecutive(cfg)
    walker = _true_walker(scenario, cfg)
    state = initial_state(scenario, cfg.world.dt)
    dt = cfg.world.dt
    guess_every = max(1, int(round(cfg.atm.guess_period_s / dt)))
    max_ticks = int(round(cfg.world.episode_timeout_s / dt))
    ever_intentions = False

    def perceive(tick: int) -> None:
        detections = observe(state, robot.id, noise, cfg.perception.sensor_range_m)
        publish(
            wm, state.entities[robot.id].pose, detections, tick,
            cfg.perception, cfg.person, dt,
            robot_shape=robot.shape, robot_speed_limit=robot.speed_limit,
            room=(scenario.room_width, scenario.room_depth),
        )

    def sweep() -> None:
        nonlocal ever_intentions
        sweep_once(agents, executive, audit=audit)
        if agents._intent_ids:
            ever_intentions = True

    perceive(0)
    if wm_dump_hook is not None:
        wm_dump_hook(0, dump(wm.snapshot()))
    sweep()

    for tick in range(max_ticks):
        person_cmd = walker.command(
            state.entities[person_id].pose, _person_bodies(state, person_id), dt)
        robot_cmd = executive.command(
            wm.snapshot(), state.entities[robot.id].pose,
            robot.shape.radius, robot.speed_limit, robot.accel_limit, dt)
        state = step(state, {person_id: person_cmd, robot.id: robot_cmd}, dt)
        perceive(tick + 1)
        if (tick + 1) % guess_every == 0:
            sweep()
            if wm_dump_hook is not None:
                wm_dump_hook(tick + 1, dump(wm.snapshot()))
        if walker.arrived:
            break

    reaction_times = [t for t in agents.reaction_times().values() if t is not None]
    committed = agents.committed_actions
    return LiveOutcome(
        state=state,
        wm=wm,
        agents=agents,
        intentions_committed=ever_intentions,
        predicted_risky=agents.first_risky_version is not None,
        action_found=bool(committed),
        reaction_time=min(reaction_times) if reaction_times else None,
        selected_target=committed[0].target if committed else None,
        final_person_collided=_person_collided(state, person_id, script.target_id),
        person_arrived=walker.arrived,
    )


def run_episode(
    scenario: Scenario,
    cfg: Config,
    noise: NoiseModel,
    audit: ActionCommitHook | None = None,
    trace: TraceHook | None = None,
    wm_dump_hook=None,
) -> EpisodeResult:
    """Label one (already sampled) scenario: ground truth from the zero-noise
    replay, predictions from the live pipeline."""
    truth = run_truth(scenario, cfg)
    live = run_live(scenario, cfg, noise, audit=audit, trace=trace, wm_dump_hook=wm_dump_hook)
    if not live.intentions_committed:
        return EpisodeResult(
            seed=scenario.seed, discarded=True, truth_collision=truth,
            predicted_risky=None, action_found=None, reaction_time=None,
            selected_target=None, final_person_collided=None,
        )
    return EpisodeResult(
        seed=scenario.seed,
        discarded=False,
        truth_collision=truth,
        predicted_risky=live.predicted_risky,
        action_found=live.action_found,
        reaction_time=live.reaction_time,
        selected_target=live.selected_target,
        final_person_collided=live.final_person_collided,
    )


def episode_seeds(master_seed: int, index: int) -> tuple[int, int]:
    """Splitting rule: scenario and noise seeds for episode i derive from
    SeedSequence([master_seed, i])."""
    ss = np.random.SeedSequence([master_seed, index])
    a, b = ss.generate_state(2)
    return int(a), int(b)


def run_batch(
    base_scenario: Scenario,
    episodes: int,
    noise: NoiseModel,
    master_seed: int,
    out_dir: str | Path | None = None,
    cfg: Config | None = None,
    audit: ActionCommitHook | None = None,
) -> tuple[list[EpisodeResult], MetricsReport, list[tuple[int, str]]]:
    """Seeded batch of independent episodes; results are written before the
    report is computed. Episode failures are recorded, never dropped."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    cfg = cfg or Config()
    results: list[EpisodeResult] = []
    failures: list[tuple[int, str]] = []
    for index in range(episodes):
        scenario_seed, noise_seed = episode_seeds(master_seed, index)
        sampled = sample_scenario(base_scenario, scenario_seed)
        episode_noise = NoiseModel(noise.pos_sigma, noise.size_inflation_sigma, noise_seed)
        try:
            results.append(run_episode(sampled, cfg, episode_noise, audit=audit))
        except Exception as exc:  # noqa: BLE001 - accounted, not dropped
            log.exception("episode %d failed", index)
            failures.append((index, f"{type(exc).__name__}: {exc}"))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_results(results, out / "episodes.csv")
        report = compute_metrics(results)
        write_report(report, out / "metrics.txt", failures)
    else:
        report = compute_metrics(results)
    return results, report, failures


# ---- persistence ----

_CSV_FIELDS = [f.name for f in fields(EpisodeResult)]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(results: list[EpisodeResult], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CSV_FIELDS)
        for r in results:
            writer.writerow([_cell(getattr(r, name)) for name in _CSV_FIELDS])


def read_results(path: str | Path) -> list[EpisodeResult]:
    def parse(name: str, text: str):
        if text == "":
            return None
        if name in ("discarded", "truth_collision", "predicted_risky",
                    "action_found", "final_person_collided"):
            return text == "true"
        if name == "reaction_time":
            return float(text)
        return int(text)

    results = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != _CSV_FIELDS:
            raise ValueError(f"unexpected result header {header}")
        for row in reader:
            kwargs = {name: parse(name, cell) for name, cell in zip(_CSV_FIELDS, row)}
            results.append(EpisodeResult(**kwargs))
    return results


def report_text(report: MetricsReport, failures: list[tuple[int, str]] | None = None) -> str:
    lines = []
    for f in fields(MetricsReport):
        value = getattr(report, f.name)
        lines.append(f"{f.name}: {_cell(value) if value is not None else 'n/a'}")
    if failures:
        lines.append(f"failed_episodes: {len(failures)}")
        for index, message in failures:
            lines.append(f"  episode {index}: {message}")
    return "\n".join(lines) + "\n"


def write_report(report: MetricsReport, path: str | Path,
                 failures: list[tuple[int, str]] | None = None) -> None:
    Path(path).write_text(report_text(report, failures), encoding="utf-8")


def bootstrap_memory(scenario: Scenario, cfg: Config, noise: NoiseModel = NoiseModel()) -> WorkingMemory:
    """Working memory as the robot would see the scenario at tick 0."""
    state = initial_state(scenario, cfg.world.dt)
    robot = scenario.robot
    wm = WorkingMemory()
    detections = observe(state, robot.id, noise, cfg.perception.sensor_range_m)
    publish(
        wm, robot.pose, detections, 0, cfg.perception, cfg.person, cfg.world.dt,
        robot_shape=robot.shape, robot_speed_limit=robot.speed_limit,
        room=(scenario.room_width, scenario.room_depth),
    )
    return wm
