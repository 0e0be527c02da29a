import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazearm.gaze import (
    CursorState,
    DwellState,
    EyeLandmarks,
    GazePipeline,
    GazeSample,
    SelectionEvent,
    bezier_point,
    median_filter,
    modified_ear,
    read_replay,
    smooth_cursor,
    synthetic_stream,
    update_dwell,
    write_replay,
)
from gazearm.geometry import Rect, display_bounds

from oracles import bezier_bernstein, dwell_oracle

DISPLAY = display_bounds(1920, 1080)


class TestMedianFilter:
    def test_constant_stream(self):
        assert median_filter([(10, 10)] * 5) == (10, 10)

    def test_outlier_rejected(self):
        window = [(1, 1), (2, 2), (100, 100), (3, 3), (4, 4)]
        # per-component sort oracle
        xs = sorted(p[0] for p in window)
        ys = sorted(p[1] for p in window)
        expected = (xs[2], ys[2])
        assert expected == (3, 3)
        assert median_filter(window) == expected

    def test_singleton(self):
        assert median_filter([(5, 9)]) == (5, 9)

    def test_empty_window(self):
        with pytest.raises(ValueError, match="no samples"):
            median_filter([])

    @given(
        st.lists(
            st.tuples(
                st.floats(-1e4, 1e4, allow_nan=False),
                st.floats(-1e4, 1e4, allow_nan=False),
            ),
            min_size=1,
            max_size=12,
        )
    )
    def test_output_within_window_bbox(self, window):
        mx, my = median_filter(window)
        xs = [p[0] for p in window]
        ys = [p[1] for p in window]
        assert min(xs) <= mx <= max(xs)
        assert min(ys) <= my <= max(ys)


class TestSmoothCursor:
    def test_fixed_point(self):
        hist = tuple((float(i), (100.0, 100.0)) for i in range(4))
        prev = CursorState(pos=(100.0, 100.0), history=hist)
        cur = smooth_cursor(prev, (100.0, 100.0), DISPLAY)
        assert cur.pos == (100.0, 100.0)

    def test_empty_history_pass_through(self):
        prev = CursorState(pos=DISPLAY.center)
        cur = smooth_cursor(prev, (50.0, 60.0), DISPLAY)
        assert cur.pos == (50.0, 60.0)

    def test_collinear_history_stays_on_axis(self):
        hist = tuple((float(i), (10.0 * i, 0.0)) for i in range(3))
        prev = CursorState(pos=(20.0, 0.0), history=hist)
        cur = smooth_cursor(prev, (30.0, 0.0), DISPLAY)
        assert cur.pos[1] == 0.0
        assert 20.0 <= cur.pos[0] <= 40.0
        # matches the Bernstein-basis oracle at the chosen parameter (1.0)
        control = [(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (30.0, 0.0)]
        expected = bezier_bernstein(control, 1.0)
        assert cur.pos == pytest.approx(tuple(expected), abs=1e-9)

    def test_history_capped_at_k(self):
        prev = CursorState(pos=(0.0, 0.0))
        for i in range(10):
            prev = smooth_cursor(prev, (float(i), 0.0), DISPLAY, t_ms=float(i))
        assert len(prev.history) <= prev.k

    def test_constant_input_reached_within_4_updates(self):
        prev = CursorState(pos=DISPLAY.center)
        target = (333.0, 777.0)
        for i in range(4):
            prev = smooth_cursor(prev, target, DISPLAY, t_ms=float(i))
        assert prev.pos == target

    def test_large_jump_is_capped(self):
        hist = ((0.0, (0.0, 0.0)),)
        prev = CursorState(pos=(0.0, 0.0), history=hist)
        cur = smooth_cursor(prev, (1000.0, 0.0), DISPLAY)
        assert cur.pos == (80.0, 0.0)

    @given(
        st.lists(
            st.tuples(
                st.floats(-5000, 5000, allow_nan=False),
                st.floats(-5000, 5000, allow_nan=False),
            ),
            min_size=1,
            max_size=30,
        )
    )
    def test_never_leaves_display(self, points):
        prev = CursorState(pos=DISPLAY.center)
        for i, pt in enumerate(points):
            prev = smooth_cursor(prev, pt, DISPLAY, t_ms=float(i))
            assert DISPLAY.contains(*prev.pos)

    def test_bezier_point_matches_bernstein(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            control = [tuple(p) for p in rng.uniform(0, 100, size=(4, 2))]
            for u in (0.0, 0.3, 0.5, 0.9, 1.0):
                got = bezier_point(control, u)
                want = bezier_bernstein(control, u)
                assert got == pytest.approx(tuple(want), abs=1e-9)


REGION = {"target": Rect(100, 100, 200, 200)}


class TestDwell:
    def run_stream(self, samples, regions=REGION, threshold=500.0):
        state = DwellState(threshold_ms=threshold)
        events = []
        for t, pt in samples:
            state, ev = update_dwell(state, pt, regions, t)
            if ev:
                events.append(ev)
        return events

    def test_fires_once_at_threshold(self):
        samples = [(t, (150.0, 150.0)) for t in np.arange(0, 1000, 1000 / 60)]
        events = self.run_stream(samples)
        assert len(events) == 1
        assert events[0].region_id == "target"
        assert events[0].t_ms >= 500.0
        assert events[0].t_ms < 500.0 + 1000 / 60 + 1e-9

    def test_exit_resets_timer(self):
        inside = (150.0, 150.0)
        outside = (500.0, 500.0)
        samples = (
            [(t, inside) for t in range(0, 401, 50)]
            + [(410, outside)]
            + [(t, inside) for t in range(450, 1001, 50)]
        )
        events = self.run_stream([(float(t), p) for t, p in samples])
        assert len(events) == 1
        assert events[0].t_ms == 950.0

    def test_no_region_no_events(self):
        samples = [(float(t), (500.0, 500.0)) for t in range(0, 10_000, 16)]
        assert self.run_stream(samples) == []

    def test_region_switch_resets(self):
        regions = {"a": Rect(0, 0, 100, 100), "b": Rect(200, 0, 100, 100)}
        samples = [(float(t), (50.0, 50.0)) for t in range(0, 400, 50)]
        samples += [(float(t), (250.0, 50.0)) for t in range(400, 1100, 50)]
        events = self.run_stream(samples, regions=regions)
        assert [e.region_id for e in events] == ["b"]

    def test_fuzz_matches_interval_oracle(self):
        rng = np.random.default_rng(42)
        regions = {
            "r0": Rect(0, 0, 300, 300),
            "r1": Rect(400, 0, 300, 300),
            "r2": Rect(0, 400, 300, 300),
        }
        for _ in range(300):
            t = 0.0
            samples = []
            pos = (rng.uniform(0, 800), rng.uniform(0, 800))
            for _ in range(60):
                t += rng.uniform(1, 200)
                if rng.random() < 0.35:
                    pos = (rng.uniform(0, 800), rng.uniform(0, 800))
                samples.append((t, pos))
            got = [(e.region_id, e.t_ms) for e in self.run_stream(samples, regions)]
            assert got == dwell_oracle(samples, regions, 500.0)


class TestModifiedEar:
    def make(self, gap26, gap35, inter_eye, scale=1.0):
        pts = (
            (0.0, 0.0),
            (10.0, 0.0),
            (20.0, 0.0),
            (30.0, 0.0),
            (20.0, gap35),
            (10.0, gap26),
        )
        pts = tuple((x * scale, y * scale) for x, y in pts)
        return EyeLandmarks(points=pts, inter_eye_dist=inter_eye * scale)

    def test_closed_eye_is_zero(self):
        assert modified_ear(self.make(0.0, 0.0, 40.0)) == 0.0

    def test_arithmetic(self):
        # (2 + 2) / (2 * 40)
        assert modified_ear(self.make(2.0, 2.0, 40.0)) == pytest.approx(0.05)

    def test_scale_invariance(self):
        base = modified_ear(self.make(3.0, 2.0, 40.0))
        scaled = modified_ear(self.make(3.0, 2.0, 40.0, scale=3.0))
        assert scaled == pytest.approx(base, rel=1e-9)

    def test_degenerate_landmarks(self):
        with pytest.raises(ValueError, match="degenerate landmarks"):
            modified_ear(self.make(2.0, 2.0, 0.0))

    @given(st.floats(0.1, 100.0), st.floats(0.1, 100.0), st.floats(1.0, 500.0))
    def test_scale_invariance_property(self, g1, g2, d):
        base = modified_ear(self.make(g1, g2, d))
        scaled = modified_ear(self.make(g1, g2, d, scale=7.5))
        assert scaled == pytest.approx(base, rel=1e-9)


class TestPipelineAndReplay:
    def test_replay_round_trip(self, tmp_path):
        samples = [
            GazeSample(t_ms=16.7, screen_pt=(10.0, 20.0), gaze_vec=None, valid=True),
            GazeSample(
                t_ms=33.3,
                screen_pt=None,
                gaze_vec=(0.1, 0.2, 0.97, -0.1, 0.2, 0.97),
                valid=True,
            ),
            GazeSample(t_ms=50.0, screen_pt=(1.0, 2.0), valid=False),
        ]
        path = str(tmp_path / "replay.csv")
        write_replay(samples, path)
        got = list(read_replay(path))
        assert got == samples

    def test_synthetic_stream_is_seeded_and_bounded(self):
        a = list(synthetic_stream(DISPLAY, 2000.0, seed=5))
        b = list(synthetic_stream(DISPLAY, 2000.0, seed=5))
        c = list(synthetic_stream(DISPLAY, 2000.0, seed=6))
        assert a == b
        assert a != c
        ts = [s.t_ms for s in a]
        assert all(t2 > t1 for t1, t2 in zip(ts, ts[1:]))
        assert all(DISPLAY.contains(*s.screen_pt) for s in a)

    def test_pipeline_emits_selection(self):
        pipeline = GazePipeline(DISPLAY, {"go": Rect(0, 0, 400, 400)})
        events = []
        for i in range(1, 60):
            ev = pipeline.feed(GazeSample(t_ms=i * 1000 / 60, screen_pt=(200, 200)))
            if ev:
                events.append(ev)
        assert len(events) == 1
        assert isinstance(events[0], SelectionEvent)
        assert events[0].region_id == "go"
        assert events[0].pos is not None

    def test_pipeline_rejects_non_monotone_timestamps(self):
        pipeline = GazePipeline(DISPLAY, {})
        pipeline.feed(GazeSample(t_ms=10.0, screen_pt=(1, 1)))
        with pytest.raises(ValueError, match="strictly increasing"):
            pipeline.feed(GazeSample(t_ms=10.0, screen_pt=(2, 2)))

    def test_invalid_samples_dropped(self):
        pipeline = GazePipeline(DISPLAY, {"go": Rect(0, 0, 400, 400)})
        start = pipeline.cursor.pos
        for i in range(1, 40):
            pipeline.feed(GazeSample(t_ms=i * 16.7, screen_pt=(200, 200), valid=False))
        assert pipeline.cursor.pos == start
