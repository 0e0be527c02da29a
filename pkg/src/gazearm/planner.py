"""Delay-split motion planning and four-way jog arithmetic.

Servo moves are split to keep the low-cost arm smooth: a spanned angle
under 30 degrees runs as one motion with no delay, 30..60 degrees as two
equal motions with one delay, and above 60 degrees as three equal motions
with two delays.  Boundary reads: 30 and 60 both split into two (the
"more than 60" rule is strict).

Display-space targets are mapped into the arm frame, the base angle comes
from atan2, and the elbow pair is driven toward the radial distance by
small differential steps: constant-height steps below the handover angle,
the affine handover law above it, with plain single-joint steps as a
fallback when neither regime makes progress.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .arm import (
    ArmGeometry,
    JointState,
    SingularConfigurationError,
    constant_height_delta,
    handover_alpha,
    planar_reach,
)
from .geometry import Bounds
from .mapping import AffineMap, map_point

DEFAULT_DELAY_MS = 200.0
SPLIT_LO_DEG = 30.0
SPLIT_HI_DEG = 60.0
AMP_INITIAL_CM = 1.0
AMP_STEP_CM = 0.5
AMP_MIN_CM = 0.25
AMP_MAX_CM = 5.0
ZERO_SPAN_DEG = 1e-6

JOG_DIRECTIONS = ("up", "down", "left", "right")


class OutOfReachError(ValueError):
    pass


@dataclass(frozen=True)
class MotionSegment:
    joint: str
    start_deg: float
    end_deg: float
    delay_after_ms: float = 0.0

    @property
    def span_deg(self) -> float:
        return self.end_deg - self.start_deg


@dataclass(frozen=True)
class JogCommand:
    direction: str  # up | down | left | right
    amplitude_cm: float

    def __post_init__(self) -> None:
        if self.direction not in JOG_DIRECTIONS:
            raise ValueError(f"unknown jog direction {self.direction!r}")
        if self.amplitude_cm <= 0:
            raise ValueError("amplitude must be positive")


def split_count(span_deg: float) -> int:
    """Number of motions the smoothing rule assigns to a span."""
    d = abs(span_deg)
    if d < SPLIT_LO_DEG:
        return 1
    if d <= SPLIT_HI_DEG:
        return 2
    return 3


def plan_joint_motion(
    joint: str, from_deg: float, to_deg: float, delay_ms: float = DEFAULT_DELAY_MS
) -> list[MotionSegment]:
    """Split one joint move into equal segments per the 30/60 degree rule.

    Segments share endpoints, so their concatenation spans exactly
    [from_deg, to_deg]; every segment except the last carries the delay.
    """
    n = split_count(to_deg - from_deg)
    cuts = [from_deg + (to_deg - from_deg) * i / n for i in range(1, n)]
    points = [from_deg, *cuts, to_deg]
    return [
        MotionSegment(
            joint=joint,
            start_deg=points[i],
            end_deg=points[i + 1],
            delay_after_ms=delay_ms if i < n - 1 else 0.0,
        )
        for i in range(n)
    ]


def jog_target(
    current_cm: tuple[float, float], cmd: JogCommand, workspace: Bounds
) -> tuple[float, float]:
    """Axis-aligned displacement on the work sheet, clamped to the workspace.

    up/down move +y/-y, left/right move -x/+x in the arm frame.
    """
    dx, dy = {
        "up": (0.0, cmd.amplitude_cm),
        "down": (0.0, -cmd.amplitude_cm),
        "left": (-cmd.amplitude_cm, 0.0),
        "right": (cmd.amplitude_cm, 0.0),
    }[cmd.direction]
    return workspace.clamp(current_cm[0] + dx, current_cm[1] + dy)


def adjust_amplitude(
    current_cm: float,
    sign: str,
    step_cm: float = AMP_STEP_CM,
    amp_min_cm: float = AMP_MIN_CM,
    amp_max_cm: float = AMP_MAX_CM,
) -> float:
    """Step the jog amplitude up or down, clamped to its bounds."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    delta = step_cm if sign == "+" else -step_cm
    return min(max(current_cm + delta, amp_min_cm), amp_max_cm)


def solve_reach(
    g: ArmGeometry,
    alpha_deg: float,
    beta_deg: float,
    r_target_cm: float,
    step_deg: float = 0.5,
    tol_cm: float = 0.05,
    max_iters: int = 5000,
) -> tuple[float, float]:
    """Step the elbow pair until the planar reach matches r_target_cm.

    Below the handover angle, alpha leads and beta follows the
    constant-height differential rule; at and above it, beta leads and
    alpha is slaved to the handover law.  When the preferred regime stalls,
    single-joint steps are tried; when everything stalls, the step is
    halved.  Raises OutOfReachError if no tolerance-satisfying pose is
    found.
    """
    lim_a, lim_b = g.limits["alpha"], g.limits["beta"]
    alpha = lim_a.clamp(alpha_deg)
    beta = lim_b.clamp(beta_deg)
    err = abs(planar_reach(g, alpha, beta) - r_target_cm)
    step = step_deg

    for _ in range(max_iters):
        if err <= tol_cm:
            return alpha, beta
        preferred: list[tuple[float, float]] = []
        if beta >= g.handover.beta_on_deg:
            for s in (step, -step):
                nb = lim_b.clamp(beta + s)
                preferred.append((handover_alpha(g, nb), nb))
        else:
            for s in (step, -step):
                try:
                    db = constant_height_delta(g, alpha, beta, s)
                except SingularConfigurationError:
                    continue
                preferred.append((lim_a.clamp(alpha + s), lim_b.clamp(beta + db)))
        fallback = [
            (lim_a.clamp(alpha + step), beta),
            (lim_a.clamp(alpha - step), beta),
            (alpha, lim_b.clamp(beta + step)),
            (alpha, lim_b.clamp(beta - step)),
        ]

        moved = False
        for tier in (preferred, fallback):
            best = None
            for na, nb in tier:
                e = abs(planar_reach(g, na, nb) - r_target_cm)
                if e < err - 1e-12 and (best is None or e < best[0]):
                    best = (e, na, nb)
            if best is not None:
                err, alpha, beta = best
                moved = True
                break
        if not moved:
            step /= 2.0
            if step < 1e-4:
                break
    if err <= tol_cm:
        return alpha, beta
    raise OutOfReachError(f"out of reach: residual {err:.3f} cm at r={r_target_cm:.3f}")


def solve_pose(
    g: ArmGeometry,
    alpha_deg: float,
    beta_deg: float,
    r_target_cm: float,
    d_target_cm: float,
    step_deg: float = 0.5,
    tol_cm: float = 0.1,
    max_iters: int = 8000,
) -> tuple[float, float]:
    """Greedy differential stepping toward a (reach, height) pair, used by
    the scripted pick/drop z-level moves.  Same stall-then-halve strategy
    as solve_reach, on the combined (r, d) error."""
    from .arm import tip_height

    lim_a, lim_b = g.limits["alpha"], g.limits["beta"]
    alpha = lim_a.clamp(alpha_deg)
    beta = lim_b.clamp(beta_deg)

    def err(a: float, b: float) -> float:
        return math.hypot(
            planar_reach(g, a, b) - r_target_cm, tip_height(g, a, b) - d_target_cm
        )

    cur = err(alpha, beta)
    step = step_deg
    for _ in range(max_iters):
        if cur <= tol_cm:
            return alpha, beta
        candidates = [
            (lim_a.clamp(alpha + step), beta),
            (lim_a.clamp(alpha - step), beta),
            (alpha, lim_b.clamp(beta + step)),
            (alpha, lim_b.clamp(beta - step)),
            (lim_a.clamp(alpha + step), lim_b.clamp(beta + step)),
            (lim_a.clamp(alpha + step), lim_b.clamp(beta - step)),
            (lim_a.clamp(alpha - step), lim_b.clamp(beta + step)),
            (lim_a.clamp(alpha - step), lim_b.clamp(beta - step)),
        ]
        best = None
        for na, nb in candidates:
            e = err(na, nb)
            if e < cur - 1e-12 and (best is None or e < best[0]):
                best = (e, na, nb)
        if best is None:
            step /= 2.0
            if step < 1e-4:
                break
        else:
            cur, alpha, beta = best
    if cur <= tol_cm:
        return alpha, beta
    raise OutOfReachError(
        f"pose unreachable: residual {cur:.3f} cm at r={r_target_cm}, d={d_target_cm}"
    )


def plan_point_to_point_cm(
    current: JointState,
    target_cm: tuple[float, float],
    g: ArmGeometry,
    delay_ms: float = DEFAULT_DELAY_MS,
    step_deg: float = 0.5,
    tol_cm: float = 0.5,
) -> list[MotionSegment]:
    """Plan base + elbow motions that bring the tip's planar position to an
    arm-frame target.  Returns an empty plan when already there."""
    tx, ty = target_cm
    r_target = math.hypot(tx, ty)
    if r_target > g.max_reach_cm:
        raise OutOfReachError(
            f"out of reach: r={r_target:.2f} cm exceeds {g.max_reach_cm:.2f} cm"
        )
    base_target = math.degrees(math.atan2(ty, tx))
    if r_target > tol_cm and not g.limits["base"].contains(base_target):
        raise OutOfReachError(f"out of reach: base angle {base_target:.1f} outside limits")
    if r_target <= tol_cm:
        base_target = current.base_deg  # direction undefined at the base axis

    alpha_f, beta_f = solve_reach(
        g, current.alpha_deg, current.beta_deg, r_target,
        step_deg=step_deg, tol_cm=tol_cm / 2.0,
    )

    plan: list[MotionSegment] = []
    for joint, frm, to in (
        ("base", current.base_deg, base_target),
        ("beta", current.beta_deg, beta_f),
        ("alpha", current.alpha_deg, alpha_f),
    ):
        if abs(to - frm) > ZERO_SPAN_DEG:
            plan.extend(plan_joint_motion(joint, frm, to, delay_ms))
    return plan


def plan_point_to_point(
    current: JointState,
    target_display: tuple[float, float],
    m: AffineMap,
    g: ArmGeometry,
    delay_ms: float = DEFAULT_DELAY_MS,
    step_deg: float = 0.5,
    tol_cm: float = 0.5,
) -> list[MotionSegment]:
    """Map a display-pixel target through the fitted calibration and plan
    the motions that reach it."""
    return plan_point_to_point_cm(
        current, map_point(m, target_display), g,
        delay_ms=delay_ms, step_deg=step_deg, tol_cm=tol_cm,
    )


def plan_to_json(plan: Sequence[MotionSegment]) -> list[dict]:
    return [
        {
            "joint": s.joint,
            "start": s.start_deg,
            "end": s.end_deg,
            "delay_after_ms": s.delay_after_ms,
        }
        for s in plan
    ]


def plan_from_json(obj: Sequence[dict]) -> list[MotionSegment]:
    return [
        MotionSegment(
            joint=s["joint"],
            start_deg=s["start"],
            end_deg=s["end"],
            delay_after_ms=s.get("delay_after_ms", 0.0),
        )
        for s in obj
    ]


def dump_plan(plan: Sequence[MotionSegment], path: str) -> None:
    with open(path, "w") as f:
        json.dump(plan_to_json(plan), f, indent=2)
