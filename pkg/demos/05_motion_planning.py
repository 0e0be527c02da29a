"""Delay-split motion planning on the simulated servo.

Left: how many motions a commanded span is split into (the 30/60 degree
rule).  Right: a 75 degree move executed on the simulator; the two delay
plateaus between the three equal segments are visible in the trajectory.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gazearm.arm import ArmGeometry
from gazearm.planner import plan_joint_motion, split_count
from gazearm.sim import ArmRuntime, SimArm

spans = np.arange(0.0, 180.0, 0.25)
counts = [split_count(d) for d in spans]

plan = plan_joint_motion("base", 10.0, 85.0, delay_ms=200.0)
print("75 degree plan:")
for seg in plan:
    print(f"  {seg.joint}: {seg.start_deg:.1f} -> {seg.end_deg:.1f} deg, "
          f"delay {seg.delay_after_ms:.0f} ms")

sim = SimArm(ArmGeometry(), max_rate_deg_s=120.0)
sim.actual["base"] = sim.commanded["base"] = 10.0
runtime = ArmRuntime(sim)
runtime.submit(plan)
ts, angles = [], []
while not runtime.idle():
    runtime.tick(10.0)
    ts.append(runtime.clock.now_ms())
    angles.append(sim.actual["base"])

fig, axes = plt.subplots(1, 2, figsize=(11, 4))
axes[0].step(spans, counts, where="post")
axes[0].set_xlabel("commanded span (deg)")
axes[0].set_ylabel("motions")
axes[0].set_yticks([1, 2, 3])
axes[0].set_title("splits: <30 one, 30-60 two, >60 three")
axes[0].axvline(30, color="gray", ls=":")
axes[0].axvline(60, color="gray", ls=":")

axes[1].plot(ts, angles, lw=1.5)
for seg in plan[:-1]:
    axes[1].axhline(seg.end_deg, color="gray", ls=":", lw=0.8)
axes[1].set_xlabel("sim time (ms)")
axes[1].set_ylabel("base angle (deg)")
axes[1].set_title("executed 10 -> 85 deg with 200 ms delays")
fig.savefig("demos/output/05_motion_planning.png", dpi=110, bbox_inches="tight")
print("wrote demos/output/05_motion_planning.png")
