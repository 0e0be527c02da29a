"""Screens, state machine, session log and task protocols of the HRI.

Three flows hang off the start screen: pick-and-drop (select a source
region, the arm runs a scripted pick; then a drop region appears),
point-to-point (dwell anywhere in the field to send the arm there), and
four-way jog (chevrons move the arm by an adjustable amplitude).  Regions
carry no text labels; they are identified by id only.

Every event and emitted action is appended to a session log from which
the task metrics (completion time, direction changes, response times)
are derived.
"""
from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .blocks import ScreenGrid
from .gaze import SelectionEvent
from .geometry import Bounds, Rect
from .planner import AMP_INITIAL_CM, JOG_DIRECTIONS, JogCommand, adjust_amplitude

SCREEN_START = "start"
SCREEN_PICK_DROP = "pick_drop"
SCREEN_POINT_TO_POINT = "point_to_point"
SCREEN_FOUR_WAY = "four_way"

PHASE_AWAIT_PICK = "await_pick"
PHASE_EXECUTING = "executing"
PHASE_AWAIT_DROP = "await_drop"

DEFAULT_TIMEOUT_MS = 10_000.0
SHEET_LONG_CM = 21.0  # half A4
SHEET_SHORT_CM = 14.9
DONE_RADIUS_CM = 0.5


# --- actions ----------------------------------------------------------------


@dataclass(frozen=True)
class PickSequence:
    source_region: str


@dataclass(frozen=True)
class DropSequence:
    pass


@dataclass(frozen=True)
class Jog:
    command: JogCommand


@dataclass(frozen=True)
class AmplitudeChange:
    amplitude_cm: float


@dataclass(frozen=True)
class PointMove:
    display_pt: tuple[float, float]


Action = Union[PickSequence, DropSequence, Jog, AmplitudeChange, PointMove]


@dataclass(frozen=True)
class SystemEvent:
    kind: str  # e.g. "sequence_done"
    t_ms: float


# --- screens ----------------------------------------------------------------


def _rect(display: Bounds, fx: float, fy: float, fw: float, fh: float) -> Rect:
    w = display.x_max - display.x_min
    h = display.y_max - display.y_min
    return Rect(display.x_min + fx * w, display.y_min + fy * h, fw * w, fh * h)


def start_regions(display: Bounds) -> dict[str, Rect]:
    return {
        "pick-drop": _rect(display, 0.06, 0.25, 0.24, 0.50),
        "point-to-point": _rect(display, 0.38, 0.25, 0.24, 0.50),
        "four-way": _rect(display, 0.70, 0.25, 0.24, 0.50),
    }


def four_way_regions(display: Bounds) -> dict[str, Rect]:
    """Direction chevrons at the screen edges, +/- at the top right."""
    return {
        "up": _rect(display, 0.40, 0.02, 0.20, 0.16),
        "down": _rect(display, 0.40, 0.82, 0.20, 0.16),
        "left": _rect(display, 0.02, 0.40, 0.16, 0.20),
        "right": _rect(display, 0.82, 0.40, 0.16, 0.20),
        "amp-plus": _rect(display, 0.84, 0.02, 0.14, 0.12),
        "amp-minus": _rect(display, 0.84, 0.16, 0.14, 0.12),
        "back": _rect(display, 0.02, 0.02, 0.14, 0.12),
    }


def point_to_point_regions(display: Bounds) -> dict[str, Rect]:
    return {
        "back": _rect(display, 0.02, 0.02, 0.14, 0.12),
        "four-way": _rect(display, 0.84, 0.02, 0.14, 0.12),
        "field": _rect(display, 0.10, 0.20, 0.80, 0.75),
    }


def pick_drop_regions(display: Bounds, phase: str) -> dict[str, Rect]:
    """Await-pick shows the sources (and back); once an object is held the
    only way forward is the drop region, so the cycle cannot be abandoned
    mid-air and pick/drop strictly alternate."""
    if phase == PHASE_AWAIT_DROP:
        return {"drop": _rect(display, 0.62, 0.62, 0.30, 0.30)}
    return {
        "back": _rect(display, 0.02, 0.02, 0.14, 0.12),
        "source-a": _rect(display, 0.15, 0.35, 0.20, 0.30),
        "source-b": _rect(display, 0.55, 0.35, 0.20, 0.30),
    }


def regions_overlap(regions: dict[str, Rect]) -> bool:
    items = list(regions.values())
    for i, a in enumerate(items):
        for b in items[i + 1 :]:
            if (
                min(a.x + a.w, b.x + b.w) - max(a.x, b.x) > 0
                and min(a.y + a.h, b.y + b.h) - max(a.y, b.y) > 0
            ):
                return True
    return False


@dataclass(frozen=True)
class UiState:
    """One active screen with its named regions and the HRI mode state."""

    display: Bounds
    screen: str = SCREEN_START
    regions: dict[str, Rect] = field(default_factory=dict)
    amplitude_cm: float = AMP_INITIAL_CM
    phase: Optional[str] = None
    executing_kind: Optional[str] = None  # "pick" | "drop" while Executing
    queued: tuple[SelectionEvent, ...] = ()

    @classmethod
    def initial(cls, display: Bounds) -> "UiState":
        return cls(display=display, regions=start_regions(display))


def _goto(state: UiState, screen: str) -> UiState:
    if screen == SCREEN_START:
        regions = start_regions(state.display)
        return replace(
            state, screen=screen, regions=regions, phase=None,
            executing_kind=None, queued=(),
        )
    if screen == SCREEN_FOUR_WAY:
        return replace(
            state, screen=screen, regions=four_way_regions(state.display),
            phase=None, executing_kind=None, queued=(),
        )
    if screen == SCREEN_POINT_TO_POINT:
        return replace(
            state, screen=screen, regions=point_to_point_regions(state.display),
            phase=None, executing_kind=None, queued=(),
        )
    if screen == SCREEN_PICK_DROP:
        return replace(
            state, screen=screen,
            regions=pick_drop_regions(state.display, PHASE_AWAIT_PICK),
            phase=PHASE_AWAIT_PICK, executing_kind=None, queued=(),
        )
    raise ValueError(f"unknown screen {screen!r}")


def transition(
    state: UiState, event: Union[SelectionEvent, SystemEvent]
) -> tuple[UiState, list[Action]]:
    """Advance the UI by one event; returns the new state and emitted actions.

    Selections outside the active regions are ignored.  During a pick/drop
    execution, selections are queued and replayed when the sequence
    finishes; duplicates of an already-pending selection are discarded.
    """
    if isinstance(event, SystemEvent):
        return _handle_system(state, event)
    rid = event.region_id
    if rid not in state.regions:
        return state, []

    if state.screen == SCREEN_START:
        target = {
            "pick-drop": SCREEN_PICK_DROP,
            "point-to-point": SCREEN_POINT_TO_POINT,
            "four-way": SCREEN_FOUR_WAY,
        }[rid]
        return _goto(state, target), []

    if state.screen == SCREEN_FOUR_WAY:
        if rid in JOG_DIRECTIONS:
            return state, [Jog(JogCommand(rid, state.amplitude_cm))]
        if rid in ("amp-plus", "amp-minus"):
            amp = adjust_amplitude(state.amplitude_cm, "+" if rid == "amp-plus" else "-")
            return replace(state, amplitude_cm=amp), [AmplitudeChange(amp)]
        if rid == "back":
            return _goto(state, SCREEN_START), []

    if state.screen == SCREEN_POINT_TO_POINT:
        if rid == "field":
            pos = getattr(event, "pos", None)
            return (state, [PointMove(pos)]) if pos is not None else (state, [])
        if rid == "four-way":
            return _goto(state, SCREEN_FOUR_WAY), []
        if rid == "back":
            return _goto(state, SCREEN_START), []

    if state.screen == SCREEN_PICK_DROP:
        if state.phase == PHASE_EXECUTING:
            if any(q.region_id == rid for q in state.queued):
                return state, []  # duplicate, discarded
            return replace(state, queued=state.queued + (event,)), []
        if rid == "back":
            return _goto(state, SCREEN_START), []
        if state.phase == PHASE_AWAIT_PICK and rid.startswith("source-"):
            new = replace(
                state, phase=PHASE_EXECUTING, executing_kind="pick",
                regions=pick_drop_regions(state.display, PHASE_EXECUTING),
            )
            return new, [PickSequence(rid)]
        if state.phase == PHASE_AWAIT_DROP and rid == "drop":
            new = replace(
                state, phase=PHASE_EXECUTING, executing_kind="drop",
                regions=pick_drop_regions(state.display, PHASE_EXECUTING),
            )
            return new, [DropSequence()]
    return state, []


def _handle_system(state: UiState, event: SystemEvent) -> tuple[UiState, list[Action]]:
    if event.kind != "sequence_done" or state.phase != PHASE_EXECUTING:
        return state, []
    next_phase = PHASE_AWAIT_DROP if state.executing_kind == "pick" else PHASE_AWAIT_PICK
    new = replace(
        state,
        phase=next_phase,
        executing_kind=None,
        regions=pick_drop_regions(state.display, next_phase),
        queued=(),
    )
    actions: list[Action] = []
    for queued in state.queued:
        new, more = transition(new, queued)
        actions.extend(more)
    return new, actions


# --- session log ------------------------------------------------------------

LOG_KINDS = (
    "highlight", "select", "pick", "drop", "jog",
    "amp_change", "direction_change", "timeout", "task_done",
)


@dataclass(frozen=True)
class LogEvent:
    t_ms: float
    kind: str
    payload: dict


class SessionLog:
    """Append-only, time-ordered event record of one session."""

    def __init__(self) -> None:
        self.events: list[LogEvent] = []

    def append(self, t_ms: float, kind: str, payload: Optional[dict] = None) -> None:
        if kind not in LOG_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        if self.events and t_ms < self.events[-1].t_ms:
            raise ValueError("events must be appended in time order")
        self.events.append(LogEvent(t_ms, kind, payload or {}))

    def __iter__(self):
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def of_kind(self, kind: str) -> list[LogEvent]:
        return [e for e in self.events if e.kind == kind]

    def to_jsonl(self, path: str) -> None:
        with open(path, "w") as f:
            for e in self.events:
                f.write(
                    json.dumps({"t_ms": e.t_ms, "kind": e.kind, "payload": e.payload})
                    + "\n"
                )

    @classmethod
    def from_jsonl(cls, path: str) -> "SessionLog":
        log = cls()
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                log.append(obj["t_ms"], obj["kind"], obj.get("payload", {}))
        return log


class UiController:
    """Owns the UI state, routes events through the transition table and
    mirrors every selection and emitted action into the session log."""

    def __init__(self, state: UiState, log: Optional[SessionLog] = None):
        self.state = state
        self.log = log if log is not None else SessionLog()
        self._last_jog_direction: Optional[str] = None

    def handle(self, event: Union[SelectionEvent, SystemEvent]) -> list[Action]:
        t = event.t_ms
        if isinstance(event, SelectionEvent):
            payload = {"region": event.region_id}
            pos = getattr(event, "pos", None)
            if pos is not None:
                payload["pos"] = list(pos)
            self.log.append(t, "select", payload)
        self.state, actions = transition(self.state, event)
        for action in actions:
            self._log_action(t, action)
        return actions

    def _log_action(self, t: float, action: Action) -> None:
        if isinstance(action, PickSequence):
            self.log.append(t, "pick", {"source": action.source_region})
        elif isinstance(action, DropSequence):
            self.log.append(t, "drop", {})
        elif isinstance(action, Jog):
            cmd = action.command
            self.log.append(
                t, "jog", {"direction": cmd.direction, "amplitude_cm": cmd.amplitude_cm}
            )
            if (
                self._last_jog_direction is not None
                and cmd.direction != self._last_jog_direction
            ):
                self.log.append(t, "direction_change", {"to": cmd.direction})
            self._last_jog_direction = cmd.direction
        elif isinstance(action, AmplitudeChange):
            self.log.append(t, "amp_change", {"amplitude_cm": action.amplitude_cm})


# --- pointing task (9-block selection protocol) ------------------------------


@dataclass(frozen=True)
class PointingSelection:
    block: int
    t_ms: float


@dataclass(frozen=True)
class ClockTick:
    t_ms: float


@dataclass(frozen=True)
class PointingTask:
    grid: ScreenGrid
    current_target: int
    highlight_t_ms: float
    timeout_ms: float = DEFAULT_TIMEOUT_MS
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    @classmethod
    def start(
        cls,
        grid: ScreenGrid,
        seed: Optional[int] = None,
        t_ms: float = 0.0,
        timeout_ms: float = DEFAULT_TIMEOUT_MS,
    ) -> "PointingTask":
        rng = np.random.default_rng(seed)
        return cls(
            grid=grid,
            current_target=int(rng.integers(0, 9)),
            highlight_t_ms=t_ms,
            timeout_ms=timeout_ms,
            rng=rng,
        )


@dataclass(frozen=True)
class PointingStep:
    task: PointingTask
    response_ms: Optional[float] = None
    timed_out: bool = False
    timeout_t_ms: Optional[float] = None


def _draw_other(rng: np.random.Generator, exclude: int) -> int:
    while True:
        pick = int(rng.integers(0, 9))
        if pick != exclude:
            return pick


def pointing_step(
    task: PointingTask, event: Union[PointingSelection, ClockTick]
) -> PointingStep:
    """One protocol step: correct selections record a response time and
    re-highlight; 10 s without a correct selection re-randomizes the target
    and records a timeout; wrong selections leave the target unchanged."""
    if isinstance(event, PointingSelection):
        if event.block != task.current_target:
            return PointingStep(task)
        response = event.t_ms - task.highlight_t_ms
        new = replace(
            task,
            current_target=_draw_other(task.rng, task.current_target),
            highlight_t_ms=event.t_ms,
        )
        return PointingStep(new, response_ms=response)
    # clock tick: timeout fires at exactly highlight + timeout
    if event.t_ms - task.highlight_t_ms >= task.timeout_ms:
        timeout_t = task.highlight_t_ms + task.timeout_ms
        new = replace(
            task,
            current_target=_draw_other(task.rng, task.current_target),
            highlight_t_ms=timeout_t,
        )
        return PointingStep(new, timed_out=True, timeout_t_ms=timeout_t)
    return PointingStep(task)


# --- reachability task -------------------------------------------------------


def default_worksheet(center: tuple[float, float] = (0.0, 10.0)) -> Bounds:
    """Half-A4 work sheet in the arm frame, long side across the base."""
    cx, cy = center
    return Bounds(
        cx - SHEET_LONG_CM / 2, cy - SHEET_SHORT_CM / 2,
        cx + SHEET_LONG_CM / 2, cy + SHEET_SHORT_CM / 2,
    )


@dataclass(frozen=True)
class ReachabilityTask:
    sheet: Bounds
    target_cm: tuple[float, float]
    done_radius_cm: float = DONE_RADIUS_CM

    @classmethod
    def random(
        cls,
        seed: Optional[int] = None,
        sheet: Optional[Bounds] = None,
        min_from_center_cm: float = 5.0,
        reach_range_cm: tuple[float, float] = (3.5, 19.8),
        done_radius_cm: float = DONE_RADIUS_CM,
    ) -> "ReachabilityTask":
        """Target drawn uniformly on the sheet, at least 5 cm from its
        center and inside the arm's comfortable radial range."""
        sheet = sheet or default_worksheet()
        rng = np.random.default_rng(seed)
        cx, cy = sheet.center
        for _ in range(10_000):
            x = rng.uniform(sheet.x_min, sheet.x_max)
            y = rng.uniform(sheet.y_min, sheet.y_max)
            if (x - cx) ** 2 + (y - cy) ** 2 < min_from_center_cm**2:
                continue
            r = (x**2 + y**2) ** 0.5
            if not reach_range_cm[0] <= r <= reach_range_cm[1]:
                continue
            return cls(sheet=sheet, target_cm=(x, y), done_radius_cm=done_radius_cm)
        raise RuntimeError("could not sample a reachable target")


def reachability_check(task: ReachabilityTask, pen_cm: tuple[float, float]) -> bool:
    """True when the pen has reached (or crossed into) the innermost circle."""
    dx = pen_cm[0] - task.target_cm[0]
    dy = pen_cm[1] - task.target_cm[1]
    return (dx * dx + dy * dy) ** 0.5 <= task.done_radius_cm


# --- metrics ------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsSummary:
    completion_times_ms: tuple[float, ...] = ()
    direction_change_count: int = 0
    response_times_ms: tuple[float, ...] = ()
    response_median_ms: float = 0.0
    response_mean_ms: float = 0.0
    response_stdev_ms: float = 0.0
    timeouts: int = 0

    def to_json(self) -> dict:
        return {
            "completion_times_ms": list(self.completion_times_ms),
            "direction_change_count": self.direction_change_count,
            "response_times_ms": list(self.response_times_ms),
            "response_median_ms": self.response_median_ms,
            "response_mean_ms": self.response_mean_ms,
            "response_stdev_ms": self.response_stdev_ms,
            "timeouts": self.timeouts,
        }


def session_metrics(log: SessionLog) -> MetricsSummary:
    """Summary over a closed session log.

    Direction changes count jog events whose direction differs from the
    previous jog; completion time is task_done minus the task's highlight.
    """
    completions: list[float] = []
    responses: list[float] = []
    changes = 0
    timeouts = 0
    last_direction: Optional[str] = None
    last_highlight_t: Optional[float] = None
    for e in log:
        if e.kind == "highlight":
            if last_highlight_t is None:
                last_highlight_t = e.t_ms
        elif e.kind == "jog":
            direction = e.payload.get("direction")
            if last_direction is not None and direction != last_direction:
                changes += 1
            last_direction = direction
        elif e.kind == "select" and "response_ms" in e.payload:
            responses.append(float(e.payload["response_ms"]))
        elif e.kind == "timeout":
            timeouts += 1
        elif e.kind == "task_done":
            if "completion_ms" in e.payload:
                completions.append(float(e.payload["completion_ms"]))
            elif last_highlight_t is not None:
                completions.append(e.t_ms - last_highlight_t)
            last_highlight_t = None
    return MetricsSummary(
        completion_times_ms=tuple(completions),
        direction_change_count=changes,
        response_times_ms=tuple(responses),
        response_median_ms=statistics.median(responses) if responses else 0.0,
        response_mean_ms=statistics.fmean(responses) if responses else 0.0,
        response_stdev_ms=statistics.stdev(responses) if len(responses) > 1 else 0.0,
        timeouts=timeouts,
    )
