"""Experiment harnesses: scripted pointing runs, gaze-driven pointing runs,
and the closed-loop four-way reachability task on the simulated arm.

These reproduce the measurable protocols (highlight/selection timing,
10 s timeout, jog-to-target with direction-change counting); the human
timing numbers themselves are not reproducible and are not attempted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .arm import ArmGeometry, JointState
from .blocks import ScreenGrid
from .gaze import (
    SAMPLE_PERIOD_MS,
    GazePipeline,
    GazeSample,
)
from .geometry import Bounds, display_bounds
from .hri import (
    AMP_INITIAL_CM,
    DEFAULT_TIMEOUT_MS,
    SCREEN_FOUR_WAY,
    ClockTick,
    Jog,
    MetricsSummary,
    PointingSelection,
    PointingTask,
    ReachabilityTask,
    SessionLog,
    SystemEvent,
    UiController,
    UiState,
    default_worksheet,
    four_way_regions,
    pointing_step,
    reachability_check,
    session_metrics,
)
from .mapping import AffineMap, CorrespondencePair, fit_mapping
from .planner import (
    AMP_MAX_CM,
    AMP_MIN_CM,
    AMP_STEP_CM,
    jog_target,
    plan_joint_motion,
    plan_point_to_point_cm,
    solve_pose,
)
from .sim import ArmRuntime, SimArm, SimClock

DEFAULT_DISPLAY = display_bounds(1920, 1080)


def _next_sample_tick(t_ms: float) -> float:
    """Smallest 60 Hz sample instant at or after t_ms."""
    k = math.ceil(t_ms / SAMPLE_PERIOD_MS - 1e-9)
    return k * SAMPLE_PERIOD_MS


# --- pointing harness ---------------------------------------------------------


def run_pointing_scripted(
    trials: int,
    latency_ms: float,
    seed: Optional[int] = None,
    grid: Optional[ScreenGrid] = None,
    timeout_ms: float = DEFAULT_TIMEOUT_MS,
) -> SessionLog:
    """Pointing protocol with a scripted selector of fixed latency.

    The selector lands its correct selection on the first 60 Hz sample
    instant at or after highlight + latency, so recorded response times
    equal the latency up to one sample period.  A latency at or beyond the
    timeout makes every trial a timeout at exactly 10 s.
    """
    grid = grid or ScreenGrid(1920, 1080)
    log = SessionLog()
    task = PointingTask.start(grid, seed=seed, t_ms=0.0, timeout_ms=timeout_ms)
    log.append(task.highlight_t_ms, "highlight", {"block": task.current_target})
    for _ in range(trials):
        if latency_ms >= timeout_ms:
            step = pointing_step(task, ClockTick(task.highlight_t_ms + timeout_ms))
            assert step.timed_out and step.timeout_t_ms is not None
            log.append(step.timeout_t_ms, "timeout", {"elapsed_ms": timeout_ms})
            task = step.task
            log.append(task.highlight_t_ms, "highlight", {"block": task.current_target})
            continue
        t_sel = _next_sample_tick(task.highlight_t_ms + latency_ms)
        step = pointing_step(task, PointingSelection(task.current_target, t_sel))
        assert step.response_ms is not None
        log.append(
            t_sel,
            "select",
            {"block": step.task.current_target, "response_ms": step.response_ms,
             "correct": True},
        )
        task = step.task
        log.append(task.highlight_t_ms, "highlight", {"block": task.current_target})
    return log


def run_pointing_synthetic(
    trials: int,
    seed: Optional[int] = None,
    grid: Optional[ScreenGrid] = None,
    dwell_ms: float = 500.0,
    jitter_px: float = 6.0,
    timeout_ms: float = DEFAULT_TIMEOUT_MS,
    max_ms: float = 600_000.0,
) -> SessionLog:
    """Pointing protocol driven end-to-end through the gaze pipeline.

    A synthetic gaze fixates the highlighted block's center (with jitter);
    the median filter, cursor smoothing and dwell detector produce the
    selections.
    """
    grid = grid or ScreenGrid(1920, 1080)
    display = display_bounds(grid.display_w, grid.display_h)
    regions = {f"block-{i}": grid.block(i) for i in range(9)}
    pipeline = GazePipeline(display, regions, dwell_ms=dwell_ms)
    rng = np.random.default_rng(seed)

    log = SessionLog()
    task = PointingTask.start(grid, seed=seed, t_ms=0.0, timeout_ms=timeout_ms)
    log.append(0.0, "highlight", {"block": task.current_target})
    completed = 0
    t = 0.0
    while completed < trials and t < max_ms:
        t += SAMPLE_PERIOD_MS
        cx, cy = grid.block(task.current_target).center
        pt = display.clamp(cx + rng.normal(0, jitter_px), cy + rng.normal(0, jitter_px))
        event = pipeline.feed(GazeSample(t_ms=t, screen_pt=pt))
        if event is not None:
            block = int(event.region_id.split("-")[1])
            step = pointing_step(task, PointingSelection(block, event.t_ms))
            correct = step.response_ms is not None
            payload: dict = {"block": block, "correct": correct}
            if correct:
                payload["response_ms"] = step.response_ms
                completed += 1
            log.append(event.t_ms, "select", payload)
            if correct:
                task = step.task
                log.append(
                    task.highlight_t_ms, "highlight", {"block": task.current_target}
                )
            continue
        step = pointing_step(task, ClockTick(t))
        if step.timed_out:
            log.append(step.timeout_t_ms, "timeout", {"elapsed_ms": timeout_ms})
            task = step.task
            log.append(task.highlight_t_ms, "highlight", {"block": task.current_target})
    return log


def run_pointing_replay(
    samples,
    grid: Optional[ScreenGrid] = None,
    seed: Optional[int] = 0,
    dwell_ms: float = 500.0,
    timeout_ms: float = DEFAULT_TIMEOUT_MS,
) -> SessionLog:
    """Pointing protocol driven by a recorded gaze replay."""
    grid = grid or ScreenGrid(1920, 1080)
    display = display_bounds(grid.display_w, grid.display_h)
    regions = {f"block-{i}": grid.block(i) for i in range(9)}
    pipeline = GazePipeline(display, regions, dwell_ms=dwell_ms)
    log = SessionLog()
    task = PointingTask.start(grid, seed=seed, t_ms=0.0, timeout_ms=timeout_ms)
    log.append(0.0, "highlight", {"block": task.current_target})
    for sample in samples:
        event = pipeline.feed(sample)
        if event is not None:
            block = int(event.region_id.split("-")[1])
            step = pointing_step(task, PointingSelection(block, event.t_ms))
            correct = step.response_ms is not None
            payload: dict = {"block": block, "correct": correct}
            if correct:
                payload["response_ms"] = step.response_ms
            log.append(event.t_ms, "select", payload)
            if correct:
                task = step.task
                log.append(
                    task.highlight_t_ms, "highlight", {"block": task.current_target}
                )
            continue
        step = pointing_step(task, ClockTick(sample.t_ms))
        if step.timed_out:
            log.append(step.timeout_t_ms, "timeout", {"elapsed_ms": timeout_ms})
            task = step.task
            log.append(task.highlight_t_ms, "highlight", {"block": task.current_target})
    return log


# --- simulated scene ----------------------------------------------------------


@dataclass
class Scene:
    """Simulated desk: the arm over a half-A4 work sheet, virtual clock."""

    geometry: ArmGeometry
    sheet: Bounds
    clock: SimClock
    sim: SimArm
    runtime: ArmRuntime
    display: Bounds = DEFAULT_DISPLAY
    amap: Optional[AffineMap] = None


def make_default_map(display: Bounds, sheet: Bounds) -> AffineMap:
    """Nine-point display-to-sheet calibration (top of screen maps to the
    far edge of the sheet), fitted exactly."""
    pairs = []
    for fy in (0.0, 0.5, 1.0):
        for fx in (0.0, 0.5, 1.0):
            dx = display.x_min + fx * (display.x_max - display.x_min)
            dy = display.y_min + fy * (display.y_max - display.y_min)
            rx = sheet.x_min + fx * (sheet.x_max - sheet.x_min)
            ry = sheet.y_max - fy * (sheet.y_max - sheet.y_min)
            pairs.append(CorrespondencePair((dx, dy), (rx, ry)))
    return fit_mapping(pairs)


def build_scene(
    geometry: Optional[ArmGeometry] = None,
    start_cm: tuple[float, float] = (0.0, 10.0),
    start_d_cm: float = 0.0,
    display: Bounds = DEFAULT_DISPLAY,
) -> Scene:
    geometry = geometry or ArmGeometry()
    sheet = default_worksheet()
    r0 = math.hypot(*start_cm)
    base0 = math.degrees(math.atan2(start_cm[1], start_cm[0]))
    alpha0, beta0 = solve_pose(geometry, 90.0, 90.0, r0, start_d_cm, tol_cm=0.02)
    clock = SimClock()
    sim = SimArm(
        geometry,
        initial=JointState(base_deg=base0, alpha_deg=alpha0, beta_deg=beta0),
        worksheet=sheet,
    )
    sim.pen_contact = True
    runtime = ArmRuntime(sim, clock)
    return Scene(
        geometry=geometry,
        sheet=sheet,
        clock=clock,
        sim=sim,
        runtime=runtime,
        display=display,
        amap=make_default_map(display, sheet),
    )


# --- closed-loop reachability ---------------------------------------------------


def _choose_region(
    setpoint: tuple[float, float],
    target: tuple[float, float],
    amplitude_cm: float,
) -> str:
    """Four-way policy of the scripted operator: jog the axis with the
    larger error; grow the amplitude when far, shrink it when it would
    overshoot."""
    ex = target[0] - setpoint[0]
    ey = target[1] - setpoint[1]
    m = max(abs(ex), abs(ey))
    if m >= 2.0 * (amplitude_cm + AMP_STEP_CM) and amplitude_cm < AMP_MAX_CM:
        return "amp-plus"
    axes = sorted(
        (("x", ex), ("y", ey)), key=lambda kv: abs(kv[1]), reverse=True
    )
    for axis, err in axes:
        if amplitude_cm < 2.0 * abs(err) - 1e-9:
            if axis == "x":
                return "right" if err > 0 else "left"
            return "up" if err > 0 else "down"
    if amplitude_cm > AMP_MIN_CM:
        return "amp-minus"
    # both errors below half the minimum amplitude: inside the done circle
    return "up" if ey >= 0 else "down"


def run_reachability(
    seed: Optional[int] = None,
    geometry: Optional[ArmGeometry] = None,
    dwell_ms: float = 500.0,
    done_radius_cm: float = 0.5,
    max_sim_ms: float = 600_000.0,
    cooldown_samples: int = 6,
) -> tuple[SessionLog, MetricsSummary, ReachabilityTask]:
    """Scripted gaze steers four-way jogs in the simulator until the pen
    reaches a random target at least 5 cm from the sheet center.

    Returns the session log (jogs, amplitude changes, direction changes,
    task_done with completion time), its metrics summary, and the task.
    """
    scene = build_scene(geometry)
    task = ReachabilityTask.random(
        seed=seed, sheet=scene.sheet, done_radius_cm=done_radius_cm
    )
    regions = four_way_regions(scene.display)
    pipeline = GazePipeline(scene.display, regions, dwell_ms=dwell_ms)
    ui = UiController(
        UiState(
            display=scene.display,
            screen=SCREEN_FOUR_WAY,
            regions=regions,
            amplitude_cm=AMP_INITIAL_CM,
        )
    )
    log = ui.log
    t0 = scene.clock.now_ms()
    log.append(t0, "highlight", {"target_cm": list(task.target_cm)})

    tip = scene.sim.tip
    setpoint = (tip.x_cm, tip.y_cm)
    neutral = scene.display.center
    cooldown = 0

    while scene.clock.now_ms() - t0 < max_sim_ms:
        scene.runtime.tick(SAMPLE_PERIOD_MS)
        t = scene.clock.now_ms()
        pen = scene.sim.tip
        if reachability_check(task, (pen.x_cm, pen.y_cm)):
            log.append(
                t,
                "task_done",
                {"completion_ms": t - t0, "target_cm": list(task.target_cm)},
            )
            break
        if cooldown > 0 or not scene.runtime.idle():
            cooldown = max(0, cooldown - 1)
            gaze_pt = neutral
        else:
            rid = _choose_region(setpoint, task.target_cm, ui.state.amplitude_cm)
            gaze_pt = regions[rid].center
        event = pipeline.feed(GazeSample(t_ms=t, screen_pt=gaze_pt))
        if event is None:
            continue
        cooldown = cooldown_samples
        for action in ui.handle(event):
            if isinstance(action, Jog):
                setpoint = jog_target(setpoint, action.command, scene.sheet)
                plan = plan_point_to_point_cm(
                    scene.sim.joint_state, setpoint, scene.geometry, tol_cm=0.2
                )
                scene.runtime.submit(plan)
    return log, session_metrics(log), task


# --- scripted pick / drop sequences ----------------------------------------------


@dataclass
class ZLevels:
    """Configured tip heights (d, cm relative to the base pivot) for the
    scripted pick/drop choreography."""

    travel_d_cm: float = 2.0
    grasp_d_cm: float = -4.0


@dataclass
class PickDropRuntime:
    """Resolves pick/drop actions into scripted arm sequences: move above
    the spot, lower to grasp height, actuate the gripper, lift."""

    scene: Scene
    controller: UiController
    spots: dict[str, tuple[float, float]]
    z: ZLevels = field(default_factory=ZLevels)

    def _move_to(self, xy: tuple[float, float], d_cm: float) -> None:
        g = self.scene.geometry
        state = self.scene.sim.joint_state
        r = math.hypot(*xy)
        base = math.degrees(math.atan2(xy[1], xy[0]))
        alpha, beta = solve_pose(g, state.alpha_deg, state.beta_deg, r, d_cm)
        plan = []
        for joint, frm, to in (
            ("base", state.base_deg, base),
            ("beta", state.beta_deg, beta),
            ("alpha", state.alpha_deg, alpha),
        ):
            if abs(to - frm) > 1e-6:
                plan.extend(plan_joint_motion(joint, frm, to))
        self.scene.runtime.submit(plan)
        self.scene.runtime.run_until_idle()

    def _set_gripper(self, closed: bool) -> None:
        self.scene.sim.command("gripper", 90.0 if closed else 0.0)
        self.scene.runtime.run_until_idle()

    def run_pick(self, source_region: str) -> None:
        xy = self.spots[source_region]
        self._move_to(xy, self.z.travel_d_cm)
        self._move_to(xy, self.z.grasp_d_cm)
        self._set_gripper(True)
        self._move_to(xy, self.z.travel_d_cm)
        self.controller.handle(
            SystemEvent("sequence_done", self.scene.clock.now_ms())
        )

    def run_drop(self) -> None:
        xy = self.spots["drop"]
        self._move_to(xy, self.z.travel_d_cm)
        self._move_to(xy, self.z.grasp_d_cm)
        self._set_gripper(False)
        self._move_to(xy, self.z.travel_d_cm)
        self.controller.handle(
            SystemEvent("sequence_done", self.scene.clock.now_ms())
        )
