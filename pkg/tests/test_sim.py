import pytest

from gazearm.arm import ArmGeometry, JointState
from gazearm.geometry import Bounds
from gazearm.planner import plan_joint_motion
from gazearm.sim import (
    ArmRuntime,
    BackendError,
    CartesianBackend,
    FakeSerialDevice,
    ProtocolError,
    SerialBackend,
    SimArm,
    SimClock,
    decode_ack,
    encode_ack,
    encode_err,
    encode_frame,
    execute,
    parse_frame,
)

G = ArmGeometry()


class TestSerialCodec:
    def test_encode_basic(self):
        assert encode_frame(2, 90.5) == "SRV 2 9050\n"

    def test_round_half_up(self):
        assert encode_frame(0, 10.005) == "SRV 0 1001\n"
        assert encode_frame(0, 10.004) == "SRV 0 1000\n"

    def test_range_checked_before_transmission(self):
        with pytest.raises(ProtocolError):
            encode_frame(1, 180.01)
        with pytest.raises(ProtocolError):
            encode_frame(1, -0.01)
        with pytest.raises(ProtocolError):
            encode_frame(9, 90.0)

    def test_parse_frame(self):
        assert parse_frame("SRV 3 18000\n") == (3, 180.0)

    def test_parse_rejects_malformed(self):
        for line in ("SRV x 100\n", "SRV 1\n", "MOV 1 100\n", "SRV 1 18001\n", ""):
            with pytest.raises(ProtocolError):
                parse_frame(line)

    def test_ack_codec(self):
        assert decode_ack(encode_ack(2)) == ("ok", 2)
        assert decode_ack(encode_err(7)) == ("err", 7)
        with pytest.raises(ProtocolError):
            decode_ack("YES 2\n")

    def test_round_trip_sample_grid(self):
        for joint in range(4):
            for k in range(0, 18001, 97):
                angle = k / 100.0
                assert parse_frame(encode_frame(joint, angle)) == (joint, angle)


class TestSimArm:
    def test_fixed_point_when_settled(self):
        sim = SimArm(G)
        before = dict(sim.actual)
        sim.tick(100.0)
        assert sim.actual == before

    def test_slew_rate_arithmetic(self):
        sim = SimArm(G, max_rate_deg_s=120.0)
        sim.command("base", sim.actual["base"] + 30.0)
        start = sim.actual["base"]
        sim.tick(100.0)
        assert sim.actual["base"] == pytest.approx(start + 12.0)

    def test_monotone_convergence(self):
        sim = SimArm(G)
        sim.command("alpha", 150.0)
        last = sim.actual["alpha"]
        for _ in range(200):
            sim.tick(10.0)
            assert sim.actual["alpha"] >= last
            last = sim.actual["alpha"]
        assert sim.actual["alpha"] == 150.0
        sim.tick(10.0)
        assert sim.actual["alpha"] == 150.0

    def test_command_respects_limits(self):
        sim = SimArm(G)
        with pytest.raises(ValueError):
            sim.command("base", 200.0)
        with pytest.raises(ValueError):
            sim.command("spin", 10.0)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            SimArm(G).tick(0.0)

    def test_pen_trace_only_on_sheet(self):
        sheet = Bounds(-10.5, 2.55, 10.5, 17.45)
        sim = SimArm(
            G,
            # tip starts at (0, 15.25), on the sheet
            initial=JointState(base_deg=90.0, alpha_deg=90.0, beta_deg=150.0),
            worksheet=sheet,
        )
        sim.pen_contact = True
        sim.command("base", 0.0)  # sweep out of the sheet toward +x
        lengths = [len(sim.trace)]
        for _ in range(400):
            sim.tick(10.0)
            lengths.append(len(sim.trace))
        assert all(b >= a for a, b in zip(lengths, lengths[1:]))
        assert len(sim.trace) > 0
        assert all(sheet.contains(x, y) for x, y in sim.trace)


class TestExecution:
    def test_delays_separate_dispatches(self):
        plan = plan_joint_motion("base", 90.0, 170.0, delay_ms=200.0)  # 3 segments
        runtime = ArmRuntime(SimArm(G))
        report = execute(plan, SimBackend_like(runtime))
        assert report.completed
        assert len(report.results) == 3
        gap = report.results[2].dispatched_ms - report.results[0].dispatched_ms
        assert gap >= 400.0

    def test_empty_plan(self):
        runtime = ArmRuntime(SimArm(G))
        report = execute([], SimBackend_like(runtime))
        assert report.completed and report.results == []

    def test_final_angle_matches_plan(self):
        for span in (1.0, 29.0, 45.0, 60.0, 61.0, 179.0):
            sim = SimArm(G, initial=JointState(base_deg=0.0))
            plan = plan_joint_motion("base", 0.0, span)
            execute(plan, SimBackend_like(ArmRuntime(sim)))
            assert sim.actual["base"] == pytest.approx(span, abs=0.01)

    def test_other_joints_not_paused_by_delay(self):
        plan = plan_joint_motion("base", 90.0, 150.0, delay_ms=500.0)
        plan += plan_joint_motion("alpha", 90.0, 100.0)
        runtime = ArmRuntime(SimArm(G))
        report = execute(plan, SimBackend_like(runtime))
        alpha = [r for r in report.results if r.segment.joint == "alpha"][0]
        base_first = [r for r in report.results if r.segment.joint == "base"][0]
        assert alpha.dispatched_ms == base_first.dispatched_ms


def SimBackend_like(runtime):
    from gazearm.sim import SimBackend

    return SimBackend(runtime)


class TestSerialBackend:
    def test_happy_path(self):
        device = FakeSerialDevice()
        backend = SerialBackend(device, clock=SimClock())
        plan = plan_joint_motion("alpha", 90.0, 140.0, delay_ms=100.0)
        report = backend.execute(plan)
        assert report.completed
        assert device.angles[1] == pytest.approx(140.0, abs=0.01)
        assert len(device.received) == len(plan)

    def test_single_nak_retried(self):
        device = FakeSerialDevice(nak_times=1)
        backend = SerialBackend(device, clock=SimClock())
        report = backend.execute(plan_joint_motion("base", 90.0, 100.0))
        assert report.completed
        assert len(device.received) == 2  # original + retry

    def test_double_nak_aborts_with_partial_report(self):
        device = FakeSerialDevice(nak_times=2)
        backend = SerialBackend(device, clock=SimClock())
        plan = plan_joint_motion("base", 90.0, 170.0)  # 3 segments
        report = backend.execute(plan)
        assert not report.completed
        assert report.error is not None
        assert report.results == []  # first segment never completed

    def test_delay_gap_on_wall_plan(self):
        device = FakeSerialDevice()
        clock = SimClock()
        backend = SerialBackend(device, clock=clock)
        plan = plan_joint_motion("base", 0.0, 90.0, delay_ms=200.0)
        report = backend.execute(plan)
        gap = report.results[1].dispatched_ms - report.results[0].completed_ms
        assert gap >= 200.0


class TestCartesianBackend:
    def test_moves_to_cartesian_target(self):
        sim = SimArm(G, initial=JointState(base_deg=90.0, alpha_deg=90.0, beta_deg=90.0))
        backend = CartesianBackend(ArmRuntime(sim))
        backend.move_to(3.0, 12.0)
        tip = sim.tip
        assert tip.x_cm == pytest.approx(3.0, abs=0.15)
        assert tip.y_cm == pytest.approx(12.0, abs=0.15)
