"""Gaze-signal conditioning and dwell selection.

A 60 Hz stream of timestamped gaze observations is median-filtered over a
short window, smoothed onto the display with a cubic Bezier step, and fed
to a dwell detector that fires one selection event per continuous
>= 500 ms stay inside a named screen region.

All operations are value-in/value-out; `GazePipeline` strings them
together for replay files and the live gateway.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .geometry import Bounds, Rect

SAMPLE_RATE_HZ = 60.0
SAMPLE_PERIOD_MS = 1000.0 / SAMPLE_RATE_HZ
MEDIAN_WINDOW = 5  # ~83 ms at 60 Hz, odd for a true median
CURSOR_HISTORY = 4  # cubic Bezier control points
MAX_STEP_PX = 80.0  # per-update displacement cap
DWELL_MS = 500.0


@dataclass(frozen=True)
class GazeSample:
    """One timestamped gaze observation.

    Either a raw display point, a pair of per-eye 3D gaze directions
    (concatenated 6-vector), or both.  `t_ms` must be strictly increasing
    within a stream.
    """

    t_ms: float
    screen_pt: Optional[tuple[float, float]] = None
    gaze_vec: Optional[tuple[float, ...]] = None  # (lx,ly,lz, rx,ry,rz)
    valid: bool = True


@dataclass(frozen=True)
class SelectionEvent:
    region_id: str
    t_ms: float
    dwell_ms: float
    pos: Optional[tuple[float, float]] = None  # cursor position at fire time


@dataclass(frozen=True)
class DwellState:
    """Dwell bookkeeping for the region currently under the cursor."""

    region_id: Optional[str] = None
    enter_t_ms: float = 0.0
    threshold_ms: float = DWELL_MS
    fired: bool = False

    def progress(self, t_ms: float) -> float:
        """Fraction of the threshold elapsed in the current stay, in [0, 1]."""
        if self.region_id is None:
            return 0.0
        return min(1.0, max(0.0, (t_ms - self.enter_t_ms) / self.threshold_ms))


@dataclass(frozen=True)
class CursorState:
    pos: tuple[float, float]
    history: tuple[tuple[float, tuple[float, float]], ...] = ()  # (t, point)
    k: int = CURSOR_HISTORY


@dataclass(frozen=True)
class EyeLandmarks:
    """Six landmarks of one eye (p1..p6; p1/p4 the horizontal corners) plus
    the distance between the two eyes' centers as the scale reference."""

    points: tuple[tuple[float, float], ...]
    inter_eye_dist: float

    def __post_init__(self) -> None:
        if len(self.points) != 6:
            raise ValueError("expected six landmarks p1..p6")


def median_filter(window: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Component-wise median of the window's points."""
    if len(window) == 0:
        raise ValueError("no samples")
    arr = np.asarray(window, dtype=float)
    if not np.isfinite(arr).all():
        raise ValueError("non-finite point in window")
    med = np.median(arr, axis=0)
    return (float(med[0]), float(med[1]))


def bezier_point(control: Sequence[tuple[float, float]], u: float) -> tuple[float, float]:
    """De Casteljau evaluation of a Bezier curve with arbitrary control points."""
    pts = [np.asarray(p, dtype=float) for p in control]
    if not pts:
        raise ValueError("no control points")
    while len(pts) > 1:
        pts = [(1.0 - u) * p + u * q for p, q in zip(pts[:-1], pts[1:])]
    return (float(pts[0][0]), float(pts[0][1]))


def smooth_cursor(
    prev: CursorState,
    filtered: tuple[float, float],
    display: Bounds,
    max_step_px: float = MAX_STEP_PX,
    t_ms: float = 0.0,
) -> CursorState:
    """Advance the cursor one step along the cubic Bezier over the last
    <= 4 filtered points.

    The curve takes the filtered history (newest last) as control points and
    is evaluated at its endpoint, so a constant stream is a fixed point.  The
    per-update displacement is capped to bound overshoot and the result is
    clamped to the display.  Degenerate histories fall back to pass-through.
    """
    fx, fy = filtered
    if not (math.isfinite(fx) and math.isfinite(fy)):
        raise ValueError("non-finite filtered point")

    fresh = len(prev.history) == 0
    history = prev.history + ((t_ms, filtered),)
    history = history[-prev.k :]
    control = [p for (_t, p) in history]
    if len(control) >= 2:
        target = bezier_point(control, 1.0)
    else:
        target = filtered  # pass-through fallback

    if not fresh:
        px, py = prev.pos
        dx, dy = target[0] - px, target[1] - py
        dist = math.hypot(dx, dy)
        if dist > max_step_px > 0:
            scale = max_step_px / dist
            target = (px + dx * scale, py + dy * scale)

    pos = display.clamp(*target)
    return CursorState(pos=pos, history=history, k=prev.k)


def region_at(regions: dict[str, Rect], px: float, py: float) -> Optional[str]:
    """Id of the first region containing the point; regions must not overlap."""
    for rid, rect in regions.items():
        if rect.contains(px, py):
            return rid
    return None


def update_dwell(
    state: DwellState,
    cursor: tuple[float, float],
    regions: dict[str, Rect],
    t_ms: float,
) -> tuple[DwellState, Optional[SelectionEvent]]:
    """Advance the dwell detector by one cursor sample.

    Exactly one event fires per continuous >= threshold stay in one region;
    leaving the region (or entering another) resets the timer.  Timestamps,
    not sample counts, are authoritative, so dropped frames cannot stretch
    a stay.
    """
    rid = region_at(regions, cursor[0], cursor[1])
    if rid != state.region_id:
        state = replace(state, region_id=rid, enter_t_ms=t_ms, fired=False)
    if (
        state.region_id is not None
        and not state.fired
        and t_ms - state.enter_t_ms >= state.threshold_ms
    ):
        state = replace(state, fired=True)
        return state, SelectionEvent(
            region_id=state.region_id,
            t_ms=t_ms,
            dwell_ms=t_ms - state.enter_t_ms,
            pos=cursor,
        )
    return state, None


def modified_ear(lm: EyeLandmarks) -> float:
    """Eyelid-opening ratio using the inter-eye distance as denominator:

        (||p2 - p6|| + ||p3 - p5||) / (2 * inter_eye_dist)

    Invariant under uniform scaling of all coordinates.
    """
    if lm.inter_eye_dist <= 0:
        raise ValueError("degenerate landmarks")
    p = [np.asarray(q, dtype=float) for q in lm.points]
    gap_26 = float(np.linalg.norm(p[1] - p[5]))
    gap_35 = float(np.linalg.norm(p[2] - p[4]))
    return (gap_26 + gap_35) / (2.0 * lm.inter_eye_dist)


class GazePipeline:
    """Conditioning chain: drop invalid samples, median-filter the last K
    screen points, Bezier-smooth the cursor, update dwell over the active
    regions.  One producer feeds samples in timestamp order."""

    def __init__(
        self,
        display: Bounds,
        regions: Optional[dict[str, Rect]] = None,
        dwell_ms: float = DWELL_MS,
        median_window: int = MEDIAN_WINDOW,
    ):
        self.display = display
        self.regions: dict[str, Rect] = dict(regions or {})
        self.median_window = median_window
        self._raw: list[tuple[float, float]] = []
        self.cursor = CursorState(pos=display.center)
        self.dwell = DwellState(threshold_ms=dwell_ms)
        self._last_t: Optional[float] = None

    @property
    def last_t_ms(self) -> Optional[float]:
        return self._last_t

    def set_regions(self, regions: dict[str, Rect]) -> None:
        """Swap the active region set (screen change); dwell restarts."""
        self.regions = dict(regions)
        self.dwell = replace(self.dwell, region_id=None, fired=False)

    def feed(self, sample: GazeSample) -> Optional[SelectionEvent]:
        if self._last_t is not None and sample.t_ms <= self._last_t:
            raise ValueError("timestamps must be strictly increasing")
        self._last_t = sample.t_ms
        if not sample.valid or sample.screen_pt is None:
            return None
        self._raw.append(sample.screen_pt)
        if len(self._raw) > self.median_window:
            self._raw.pop(0)
        filtered = median_filter(self._raw)
        self.cursor = smooth_cursor(
            self.cursor, filtered, self.display, t_ms=sample.t_ms
        )
        self.dwell, event = update_dwell(
            self.dwell, self.cursor.pos, self.regions, sample.t_ms
        )
        return event


# --- replay files -----------------------------------------------------------
#
# One record per line:  t_ms,x_px,y_px,gx0,gy0,gz0,gx1,gy1,gz1,valid
# with empty fields for absent channels.


def write_replay(samples: Iterable[GazeSample], path: str) -> None:
    with open(path, "w") as f:
        for s in samples:
            x, y = ("", "") if s.screen_pt is None else s.screen_pt
            vec = [""] * 6 if s.gaze_vec is None else list(s.gaze_vec)
            fields = [s.t_ms, x, y, *vec, int(s.valid)]
            f.write(",".join(str(v) for v in fields) + "\n")


def read_replay(path: str) -> Iterator[GazeSample]:
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 10:
                raise ValueError(f"malformed replay record: {line!r}")
            t = float(parts[0])
            screen_pt = None
            if parts[1] != "" and parts[2] != "":
                screen_pt = (float(parts[1]), float(parts[2]))
            gaze_vec = None
            if all(p != "" for p in parts[3:9]):
                gaze_vec = tuple(float(p) for p in parts[3:9])
            valid = parts[9].strip().lower() in ("1", "true")
            yield GazeSample(t_ms=t, screen_pt=screen_pt, gaze_vec=gaze_vec, valid=valid)


def synthetic_stream(
    display: Bounds,
    duration_ms: float,
    seed: int,
    fixation_ms: float = 800.0,
    jitter_px: float = 6.0,
) -> Iterator[GazeSample]:
    """Seeded synthetic gaze: fixations at random display points with
    Gaussian jitter, instant saccades between them, 60 Hz timestamps."""
    rng = np.random.default_rng(seed)
    target = (
        rng.uniform(display.x_min, display.x_max),
        rng.uniform(display.y_min, display.y_max),
    )
    next_saccade = fixation_ms
    n = int(duration_ms / SAMPLE_PERIOD_MS)
    for i in range(1, n + 1):
        t = i * SAMPLE_PERIOD_MS
        if t >= next_saccade:
            target = (
                rng.uniform(display.x_min, display.x_max),
                rng.uniform(display.y_min, display.y_max),
            )
            next_saccade = t + fixation_ms
        x = target[0] + rng.normal(0.0, jitter_px)
        y = target[1] + rng.normal(0.0, jitter_px)
        x, y = display.clamp(x, y)
        yield GazeSample(t_ms=t, screen_pt=(x, y))
