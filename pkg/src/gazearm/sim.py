"""Simulated servo arm, serial line protocol, and plan execution.

The simulator advances commanded joints at a slew-rate limit on a
deterministic virtual clock (10 ms ticks by default).  The serial path
speaks a one-command-per-line ASCII grammar to the microcontroller:

    outbound  SRV <joint_id> <centidegrees>\\n
    inbound   OK <joint_id>\\n   or   ERR <code>\\n

A NAK is retried once, then the plan aborts with a partial report.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .arm import ArmGeometry, JointState, TipPose, forward_tip
from .geometry import Bounds
from .planner import MotionSegment

JOINT_IDS = {"base": 0, "alpha": 1, "beta": 2, "gripper": 3}
JOINT_NAMES = {v: k for k, v in JOINT_IDS.items()}
DEFAULT_MAX_RATE_DEG_S = 120.0  # typical hobby-servo no-load speed
DEFAULT_TICK_MS = 10.0
GRIPPER_CLOSED_DEG = 90.0


class ProtocolError(ValueError):
    pass


class BackendError(RuntimeError):
    pass


# --- serial codec -----------------------------------------------------------


def encode_frame(joint_id: int, angle_deg: float) -> str:
    """Fixed-point centidegree command frame; validates before transmission."""
    if joint_id not in JOINT_NAMES:
        raise ProtocolError(f"unknown joint id {joint_id}")
    if not math.isfinite(angle_deg) or not 0.0 <= angle_deg <= 180.0:
        raise ProtocolError(f"angle {angle_deg} outside [0, 180]")
    centideg = math.floor(angle_deg * 100.0 + 0.5)  # round half up
    return f"SRV {joint_id} {centideg}\n"


def parse_frame(line: str) -> tuple[int, float]:
    """Inverse of encode_frame, used by the device end and tests."""
    parts = line.strip().split(" ")
    if len(parts) != 3 or parts[0] != "SRV":
        raise ProtocolError(f"malformed command frame: {line!r}")
    try:
        joint_id = int(parts[1])
        centideg = int(parts[2])
    except ValueError as e:
        raise ProtocolError(f"malformed command frame: {line!r}") from e
    if joint_id not in JOINT_NAMES:
        raise ProtocolError(f"unknown joint id {joint_id}")
    if not 0 <= centideg <= 18000:
        raise ProtocolError(f"centidegrees {centideg} outside [0, 18000]")
    return joint_id, centideg / 100.0


def encode_ack(joint_id: int) -> str:
    return f"OK {joint_id}\n"


def encode_err(code: int) -> str:
    return f"ERR {code}\n"


def decode_ack(line: str) -> tuple[str, int]:
    """('ok', joint_id) or ('err', code); total on well-formed ack lines."""
    parts = line.strip().split(" ")
    if len(parts) == 2 and parts[0] == "OK":
        try:
            return ("ok", int(parts[1]))
        except ValueError:
            pass
    if len(parts) == 2 and parts[0] == "ERR":
        try:
            return ("err", int(parts[1]))
        except ValueError:
            pass
    raise ProtocolError(f"malformed ack line: {line!r}")


# --- clocks -----------------------------------------------------------------


class Clock(Protocol):
    def now_ms(self) -> float: ...

    def sleep_ms(self, dt_ms: float) -> None: ...


class SimClock:
    """Deterministic virtual clock."""

    def __init__(self, start_ms: float = 0.0):
        self._now = start_ms

    def now_ms(self) -> float:
        return self._now

    def sleep_ms(self, dt_ms: float) -> None:
        self._now += dt_ms


class WallClock:
    def __init__(self) -> None:
        self._t0 = time.monotonic()

    def now_ms(self) -> float:
        return (time.monotonic() - self._t0) * 1000.0

    def sleep_ms(self, dt_ms: float) -> None:
        if dt_ms > 0:
            time.sleep(dt_ms / 1000.0)


# --- simulated arm ----------------------------------------------------------


class SimArm:
    """Slew-rate-limited servo arm with an optional pen trace.

    Each tick moves every joint toward its commanded angle by at most
    max_rate * dt, landing exactly on the target (monotone convergence).
    While pen contact is on, the tip's planar position is appended to the
    trace whenever it lies on the work sheet.
    """

    def __init__(
        self,
        geometry: ArmGeometry,
        initial: Optional[JointState] = None,
        max_rate_deg_s: float = DEFAULT_MAX_RATE_DEG_S,
        worksheet: Optional[Bounds] = None,
    ):
        initial = initial or JointState()
        self.geometry = geometry
        self.max_rate_deg_s = max_rate_deg_s
        self.worksheet = worksheet
        self.actual: dict[str, float] = {
            "base": initial.base_deg,
            "alpha": initial.alpha_deg,
            "beta": initial.beta_deg,
            "gripper": GRIPPER_CLOSED_DEG if initial.gripper_closed else 0.0,
        }
        self.commanded: dict[str, float] = dict(self.actual)
        self.pen_contact = False
        self.trace: list[tuple[float, float]] = []

    @property
    def joint_state(self) -> JointState:
        return JointState(
            base_deg=self.actual["base"],
            alpha_deg=self.actual["alpha"],
            beta_deg=self.actual["beta"],
            gripper_closed=self.actual["gripper"] >= GRIPPER_CLOSED_DEG / 2,
        )

    @property
    def tip(self) -> TipPose:
        return forward_tip(self.geometry, self.joint_state)

    def command(self, joint: str, angle_deg: float) -> None:
        if joint not in self.actual:
            raise ValueError(f"unknown joint {joint!r}")
        limits = self.geometry.limits.get(joint)
        if limits is not None and not limits.contains(angle_deg):
            raise ValueError(f"{joint} command {angle_deg} outside limits")
        self.commanded[joint] = angle_deg

    def settled(self, joint: Optional[str] = None) -> bool:
        joints = [joint] if joint else list(self.actual)
        return all(self.actual[j] == self.commanded[j] for j in joints)

    def tick(self, dt_ms: float) -> "SimArm":
        if dt_ms <= 0:
            raise ValueError("dt_ms must be positive")
        max_step = self.max_rate_deg_s * dt_ms / 1000.0
        for joint, actual in self.actual.items():
            gap = self.commanded[joint] - actual
            if gap != 0.0:
                self.actual[joint] = actual + math.copysign(
                    min(abs(gap), max_step), gap
                )
        if self.pen_contact:
            tip = self.tip
            if self.worksheet is None or self.worksheet.contains(tip.x_cm, tip.y_cm):
                self.trace.append((tip.x_cm, tip.y_cm))
        return self


# --- execution --------------------------------------------------------------


@dataclass(frozen=True)
class SegmentResult:
    segment: MotionSegment
    dispatched_ms: float
    completed_ms: float


@dataclass
class ExecutionReport:
    results: list[SegmentResult] = field(default_factory=list)
    completed: bool = True
    error: Optional[str] = None


class ArmRuntime:
    """Owns the simulated arm and drives queued segments on the tick loop.

    One in-flight segment per joint, FIFO; a segment's delay keeps only its
    own joint idle.  Usable both for blocking execution on the virtual
    clock and incrementally from a live serve loop.
    """

    def __init__(
        self,
        sim: SimArm,
        clock: Optional[Clock] = None,
        tick_ms: float = DEFAULT_TICK_MS,
    ):
        self.sim = sim
        self.clock: Clock = clock or SimClock()
        self.tick_ms = tick_ms
        self._queues: dict[str, list[MotionSegment]] = {j: [] for j in JOINT_IDS}
        self._active: dict[str, Optional[MotionSegment]] = {j: None for j in JOINT_IDS}
        self._ready_at: dict[str, float] = {j: 0.0 for j in JOINT_IDS}
        self._dispatched_at: dict[str, float] = {}
        self.results: list[SegmentResult] = []

    def submit(self, plan: Sequence[MotionSegment]) -> None:
        for seg in plan:
            if seg.joint not in self._queues:
                raise ValueError(f"unknown joint {seg.joint!r}")
            self._queues[seg.joint].append(seg)

    def idle(self) -> bool:
        return all(q == [] for q in self._queues.values()) and all(
            a is None for a in self._active.values()
        ) and self.sim.settled()

    def tick(self, dt_ms: Optional[float] = None) -> None:
        dt = dt_ms if dt_ms is not None else self.tick_ms
        now = self.clock.now_ms()
        for joint in JOINT_IDS:
            active = self._active[joint]
            if active is None and self._queues[joint] and now >= self._ready_at[joint]:
                seg = self._queues[joint].pop(0)
                self.sim.command(joint, seg.end_deg)
                self._active[joint] = seg
                self._dispatched_at[joint] = now
        self.clock.sleep_ms(dt)
        self.sim.tick(dt)
        done = self.clock.now_ms()
        for joint in JOINT_IDS:
            active = self._active[joint]
            if active is not None and self.sim.settled(joint):
                self.results.append(
                    SegmentResult(active, self._dispatched_at[joint], done)
                )
                self._ready_at[joint] = done + active.delay_after_ms
                self._active[joint] = None

    def run_until_idle(self, max_ms: float = 600_000.0) -> None:
        deadline = self.clock.now_ms() + max_ms
        while not self.idle():
            if self.clock.now_ms() > deadline:
                raise BackendError("execution did not settle before deadline")
            self.tick()


def execute(plan: Sequence[MotionSegment], backend: "SimBackend | SerialBackend") -> ExecutionReport:
    """Dispatch plan segments in order, honoring per-segment delays."""
    return backend.execute(plan)


class SimBackend:
    """Executes plans on the simulated arm, virtual clock by default."""

    def __init__(self, runtime: ArmRuntime):
        self.runtime = runtime

    def execute(self, plan: Sequence[MotionSegment]) -> ExecutionReport:
        start = len(self.runtime.results)
        self.runtime.submit(plan)
        self.runtime.run_until_idle()
        return ExecutionReport(results=self.runtime.results[start:], completed=True)


class SerialTransport(Protocol):
    def write_line(self, line: str) -> None: ...

    def read_line(self) -> str: ...


class FakeSerialDevice:
    """Loopback stand-in for the microcontroller: parses command frames,
    tracks servo registers, acks.  Can be scripted to NAK."""

    def __init__(self, nak_times: int = 0, nak_code: int = 1):
        self.angles: dict[int, float] = {}
        self.received: list[str] = []
        self._pending: list[str] = []
        self._nak_times = nak_times
        self._nak_code = nak_code

    def write_line(self, line: str) -> None:
        self.received.append(line)
        try:
            joint_id, angle = parse_frame(line)
        except ProtocolError:
            self._pending.append(encode_err(99))
            return
        if self._nak_times > 0:
            self._nak_times -= 1
            self._pending.append(encode_err(self._nak_code))
            return
        self.angles[joint_id] = angle
        self._pending.append(encode_ack(joint_id))

    def read_line(self) -> str:
        if not self._pending:
            raise BackendError("device produced no ack")
        return self._pending.pop(0)


class SerialBackend:
    """Drives the physical arm over the line protocol.

    Each segment becomes one command frame; a NAK is retried once, a second
    NAK aborts with the partial report.  Motion time is estimated from the
    servo slew rate since the device gives no completion feedback.
    """

    def __init__(
        self,
        transport: SerialTransport,
        clock: Optional[Clock] = None,
        max_rate_deg_s: float = DEFAULT_MAX_RATE_DEG_S,
    ):
        self.transport = transport
        self.clock: Clock = clock or WallClock()
        self.max_rate_deg_s = max_rate_deg_s

    def _send(self, joint: str, angle_deg: float) -> None:
        frame = encode_frame(JOINT_IDS[joint], angle_deg)
        for attempt in (1, 2):
            self.transport.write_line(frame)
            status, _ = decode_ack(self.transport.read_line())
            if status == "ok":
                return
        raise BackendError(f"device rejected {frame.strip()!r} twice")

    def execute(self, plan: Sequence[MotionSegment]) -> ExecutionReport:
        report = ExecutionReport()
        ready_at: dict[str, float] = {}
        for seg in plan:
            wait = ready_at.get(seg.joint, 0.0) - self.clock.now_ms()
            if wait > 0:
                self.clock.sleep_ms(wait)
            dispatched = self.clock.now_ms()
            try:
                self._send(seg.joint, seg.end_deg)
            except (BackendError, ProtocolError) as e:
                report.completed = False
                report.error = str(e)
                return report
            travel_ms = abs(seg.span_deg) / self.max_rate_deg_s * 1000.0
            self.clock.sleep_ms(travel_ms)
            done = self.clock.now_ms()
            report.results.append(SegmentResult(seg, dispatched, done))
            ready_at[seg.joint] = done + seg.delay_after_ms
        return report


class CartesianBackend:
    """SDK-style adapter: accepts arm-frame Cartesian targets directly and
    resolves them onto the simulated arm (mirrors driving a high-end
    manipulator in Cartesian space)."""

    def __init__(self, runtime: ArmRuntime, tol_cm: float = 0.1):
        self.runtime = runtime
        self.tol_cm = tol_cm

    def move_to(self, x_cm: float, y_cm: float) -> ExecutionReport:
        from .planner import plan_point_to_point_cm

        plan = plan_point_to_point_cm(
            self.runtime.sim.joint_state,
            (x_cm, y_cm),
            self.runtime.sim.geometry,
            tol_cm=self.tol_cm,
        )
        return SimBackend(self.runtime).execute(plan)
