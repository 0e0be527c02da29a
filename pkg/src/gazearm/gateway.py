"""Full-duplex JSON gateway between UIs and the simulated arm.

Inbound messages:
    {"type": "gaze", "t": ms, "x": px, "y": px}
    {"type": "select", "region": id}
    {"type": "set_screen", "screen": name}

Outbound messages:
    {"type": "config", ...}                       once per connection
    {"type": "state", joints/tip/screen/regions/dwell/trace/...}
    {"type": "event", t_ms/kind/payload}          mirrors the session log
    {"type": "error", "error": text}

Control messages (select/set_screen, or anything malformed) are always
answered immediately; gaze is data-plane and is folded into state
snapshots emitted at most every 33 ms of arm time.  The state stream is
server-authoritative: clients never advance the state machine locally.
"""
from __future__ import annotations

import asyncio
import math
import os
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .blocks import ScreenGrid, make_marker_path
from .gaze import GazePipeline, GazeSample, SelectionEvent
from .harness import Scene, build_scene
from .hri import (
    DropSequence,
    Jog,
    PickSequence,
    PointMove,
    SystemEvent,
    UiController,
    UiState,
    _goto,
)
from .planner import (
    OutOfReachError,
    jog_target,
    plan_joint_motion,
    plan_point_to_point,
    plan_point_to_point_cm,
    solve_pose,
)

STATE_PERIOD_MS = 1000.0 / 30.0  # outbound state at <= 30 Hz
TRACE_TAIL = 600  # points of pen trace carried per state message

DEFAULT_SPOTS = {
    "source-a": (-5.0, 8.0),
    "source-b": (5.0, 8.0),
    "drop": (0.0, 14.0),
}


class Gateway:
    """Owns the pipeline, UI state machine, session log and arm runtime;
    turns inbound messages into state/event replies."""

    def __init__(
        self,
        scene: Optional[Scene] = None,
        dwell_ms: float = 500.0,
        spots: Optional[dict[str, tuple[float, float]]] = None,
        travel_d_cm: float = 2.0,
        grasp_d_cm: float = -4.0,
    ):
        self.scene = scene or build_scene()
        self.controller = UiController(UiState.initial(self.scene.display))
        self.pipeline = GazePipeline(
            self.scene.display, self.controller.state.regions, dwell_ms=dwell_ms
        )
        self.spots = dict(spots or DEFAULT_SPOTS)
        self.travel_d_cm = travel_d_cm
        self.grasp_d_cm = grasp_d_cm
        tip = self.scene.sim.tip
        self.setpoint = (tip.x_cm, tip.y_cm)
        self._sequence: list[tuple] = []
        self._log_cursor = 0
        self._last_state_t = -math.inf

    # -- outbound builders ----------------------------------------------------

    def config_message(self) -> dict:
        d = self.scene.display
        grid = ScreenGrid(d.x_max - d.x_min, d.y_max - d.y_min)
        return {
            "type": "config",
            "display": [d.x_max - d.x_min, d.y_max - d.y_min],
            "sheet": {
                "x_min": self.scene.sheet.x_min,
                "y_min": self.scene.sheet.y_min,
                "x_max": self.scene.sheet.x_max,
                "y_max": self.scene.sheet.y_max,
            },
            "spots": {k: list(v) for k, v in self.spots.items()},
            "dwell_ms": self.pipeline.dwell.threshold_ms,
            "calibration_path": make_marker_path(grid, 2000.0, 500.0).to_json(),
        }

    def session_t(self) -> float:
        """Monotone session time: the later of arm time and last gaze time.

        Gaze timestamps come from the client, the arm runs on its own
        clock; logging on the max of both keeps the session log ordered."""
        last_gaze = self.pipeline.last_t_ms or 0.0
        return max(self.scene.clock.now_ms(), last_gaze)

    def state_message(self) -> dict:
        sim = self.scene.sim
        tip = sim.tip
        state = self.controller.state
        t = self.session_t()
        self._last_state_t = self.scene.clock.now_ms()
        return {
            "type": "state",
            "t_ms": t,
            "joints": dict(sim.actual),
            "tip": [tip.x_cm, tip.y_cm, tip.z_cm],
            "screen": state.screen,
            "phase": state.phase,
            "amplitude_cm": state.amplitude_cm,
            "regions": [
                {"id": rid, "x": r.x, "y": r.y, "w": r.w, "h": r.h}
                for rid, r in state.regions.items()
            ],
            "cursor": list(self.pipeline.cursor.pos),
            "dwell": {
                "region": self.pipeline.dwell.region_id,
                "progress": self.pipeline.dwell.progress(
                    self.pipeline.last_t_ms if self.pipeline.last_t_ms is not None else t
                ),
            },
            "trace": [list(p) for p in sim.trace[-TRACE_TAIL:]],
            "gripper_closed": sim.joint_state.gripper_closed,
        }

    def _drain_log(self) -> list[dict]:
        out = []
        for e in self.controller.log.events[self._log_cursor :]:
            out.append(
                {"type": "event", "t_ms": e.t_ms, "kind": e.kind, "payload": e.payload}
            )
        self._log_cursor = len(self.controller.log.events)
        return out

    def _state_if_due(self, force: bool) -> list[dict]:
        if force or self.scene.clock.now_ms() - self._last_state_t >= STATE_PERIOD_MS:
            return [self.state_message()]
        return []

    # -- inbound ----------------------------------------------------------------

    def handle_message(self, msg: dict) -> list[dict]:
        """Process one inbound message; always returns at least one reply
        for control messages, a throttled state snapshot for gaze."""
        try:
            kind = msg.get("type")
            if kind == "gaze":
                return self._handle_gaze(msg)
            if kind == "select":
                region = msg["region"]
                t = self.session_t()
                state = self.controller.state
                pos = state.regions[region].center if region in state.regions else None
                self._apply_selection(
                    SelectionEvent(region_id=region, t_ms=t, dwell_ms=0.0, pos=pos)
                )
                return self._drain_log() + [self.state_message()]
            if kind == "set_screen":
                self.controller.state = _goto(self.controller.state, msg["screen"])
                self.pipeline.set_regions(self.controller.state.regions)
                return [self.state_message()]
            return [{"type": "error", "error": f"unknown message type {kind!r}"}]
        except (KeyError, TypeError, ValueError) as e:
            return [{"type": "error", "error": str(e)}]

    def _handle_gaze(self, msg: dict) -> list[dict]:
        sample = GazeSample(
            t_ms=float(msg["t"]), screen_pt=(float(msg["x"]), float(msg["y"]))
        )
        try:
            event = self.pipeline.feed(sample)
        except ValueError as e:
            return [{"type": "error", "error": str(e)}]
        out: list[dict] = []
        if event is not None:
            self._apply_selection(event)
            out.extend(self._drain_log())
        out.extend(self._state_if_due(force=event is not None))
        return out

    # -- state machine glue -------------------------------------------------------

    def _apply_selection(self, event: SelectionEvent) -> None:
        regions_before = self.controller.state.regions
        actions = self.controller.handle(event)
        if self.controller.state.regions is not regions_before:
            self.pipeline.set_regions(self.controller.state.regions)
        self._apply_actions(actions)

    def _apply_actions(self, actions) -> None:
        for action in actions:
            try:
                if isinstance(action, Jog):
                    self.setpoint = jog_target(
                        self.setpoint, action.command, self.scene.sheet
                    )
                    self.scene.runtime.submit(
                        plan_point_to_point_cm(
                            self.scene.sim.joint_state,
                            self.setpoint,
                            self.scene.geometry,
                            tol_cm=0.2,
                        )
                    )
                elif isinstance(action, PointMove):
                    assert self.scene.amap is not None
                    plan = plan_point_to_point(
                        self.scene.sim.joint_state,
                        action.display_pt,
                        self.scene.amap,
                        self.scene.geometry,
                        tol_cm=0.2,
                    )
                    self.scene.runtime.submit(plan)
                    if plan:
                        last = {"base": None, "alpha": None, "beta": None}
                        for seg in plan:
                            last[seg.joint] = seg.end_deg
                        # track the commanded planar position for later jogs
                        self.setpoint = _planar_of(self.scene, last)
                elif isinstance(action, PickSequence):
                    self._queue_sequence(self.spots[action.source_region])
                elif isinstance(action, DropSequence):
                    self._queue_sequence(self.spots["drop"])
            except OutOfReachError as e:
                self.controller.log.append(
                    self.session_t(), "select", {"error": str(e)}
                )

    def _queue_sequence(self, xy: tuple[float, float]) -> None:
        closing = not self.scene.sim.joint_state.gripper_closed
        self._sequence = [
            ("move", xy, self.travel_d_cm),
            ("move", xy, self.grasp_d_cm),
            ("grip", closing),
            ("move", xy, self.travel_d_cm),
            ("notify",),
        ]

    def _advance_sequence(self) -> None:
        if not self._sequence or not self.scene.runtime.idle():
            return
        stage = self._sequence.pop(0)
        if stage[0] == "move":
            _, xy, d_cm = stage
            g = self.scene.geometry
            s = self.scene.sim.joint_state
            r = math.hypot(*xy)
            base = math.degrees(math.atan2(xy[1], xy[0]))
            alpha, beta = solve_pose(g, s.alpha_deg, s.beta_deg, r, d_cm)
            plan = []
            for joint, frm, to in (
                ("base", s.base_deg, base),
                ("beta", s.beta_deg, beta),
                ("alpha", s.alpha_deg, alpha),
            ):
                if abs(to - frm) > 1e-6:
                    plan.extend(plan_joint_motion(joint, frm, to))
            self.scene.runtime.submit(plan)
        elif stage[0] == "grip":
            self.scene.sim.command("gripper", 90.0 if stage[1] else 0.0)
        elif stage[0] == "notify":
            regions_before = self.controller.state.regions
            actions = self.controller.handle(
                SystemEvent("sequence_done", self.session_t())
            )
            if self.controller.state.regions is not regions_before:
                self.pipeline.set_regions(self.controller.state.regions)
            self._apply_actions(actions)

    # -- time --------------------------------------------------------------------

    def tick(self, dt_ms: float) -> list[dict]:
        """Advance the arm and any scripted sequence; returns broadcasts."""
        self.scene.runtime.tick(dt_ms)
        self._advance_sequence()
        return self._drain_log() + self._state_if_due(force=False)


def _planar_of(scene: Scene, last: dict) -> tuple[float, float]:
    from .arm import JointState, forward_tip

    s = scene.sim.joint_state
    pose = forward_tip(
        scene.geometry,
        JointState(
            base_deg=last["base"] if last["base"] is not None else s.base_deg,
            alpha_deg=last["alpha"] if last["alpha"] is not None else s.alpha_deg,
            beta_deg=last["beta"] if last["beta"] is not None else s.beta_deg,
        ),
    )
    return (pose.x_cm, pose.y_cm)


# --- websocket server -------------------------------------------------------


def create_app(gateway: Optional[Gateway] = None):
    """FastAPI app exposing the gateway at /ws.

    The connection handler ticks the gateway while the socket is quiet so
    the arm keeps moving and state keeps streaming at <= 30 Hz.
    """
    gw = gateway or Gateway()
    app = FastAPI(title="gazearm gateway")
    app.state.gateway = gw

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        await ws.send_json(gw.config_message())
        await ws.send_json(gw.state_message())
        try:
            while True:
                try:
                    msg = await asyncio.wait_for(
                        ws.receive_json(), timeout=STATE_PERIOD_MS / 1000.0
                    )
                except asyncio.TimeoutError:
                    for out in gw.tick(STATE_PERIOD_MS):
                        await ws.send_json(out)
                    continue
                for out in gw.handle_message(msg):
                    await ws.send_json(out)
        except WebSocketDisconnect:
            return

    return app


def serve(
    port: int = 8765,
    host: str = "127.0.0.1",
    gateway: Optional[Gateway] = None,
) -> None:
    import uvicorn

    port = int(os.environ.get("GAZEARM_PORT", port))
    uvicorn.run(create_app(gateway), host=host, port=port, log_level="warning")
