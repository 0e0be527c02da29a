"""Closed-loop reachability task.

Scripted gaze dwells on the four-way chevrons; each selection jogs the
pen-holding arm by the current amplitude until the pen crosses the target
circle on the half-A4 work sheet.  The figure shows the jog path, the
target rings, and the decisions behind the direction-change count.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from gazearm.harness import run_reachability
from gazearm.hri import default_worksheet

log, summary, task = run_reachability(seed=42)
done = log.of_kind("task_done")[0]
jogs = log.of_kind("jog")
print(f"target: ({task.target_cm[0]:.2f}, {task.target_cm[1]:.2f}) cm")
print(f"completed in {done.payload['completion_ms'] / 1000:.1f} s "
      f"with {len(jogs)} jogs and {summary.direction_change_count} direction changes")
for e in jogs:
    print(f"  {e.t_ms:8.0f} ms  jog {e.payload['direction']:5s} "
          f"amp {e.payload['amplitude_cm']:.2f} cm")

# reconstruct the pen setpoints from the logged jogs (the pen starts at the
# sheet center line, (0, 10) in the arm frame)
sheet = default_worksheet()
xs, ys = [0.0], [10.0]
for e in jogs:
    amp = e.payload["amplitude_cm"]
    dx = {"left": -amp, "right": amp}.get(e.payload["direction"], 0.0)
    dy = {"down": -amp, "up": amp}.get(e.payload["direction"], 0.0)
    xs.append(min(max(xs[-1] + dx, sheet.x_min), sheet.x_max))
    ys.append(min(max(ys[-1] + dy, sheet.y_min), sheet.y_max))

fig, ax = plt.subplots(figsize=(7, 6))
ax.add_patch(plt.Rectangle((sheet.x_min, sheet.y_min),
                           sheet.x_max - sheet.x_min, sheet.y_max - sheet.y_min,
                           fill=False, ec="black", label="work sheet"))
ax.plot(xs, ys, "-o", ms=3, label="pen setpoints")
for radius, color in ((2.0, "#ffcccc"), (1.0, "#ff8888"), (task.done_radius_cm, "red")):
    ax.add_patch(plt.Circle(task.target_cm, radius, fill=False, ec=color, lw=1.5))
ax.plot(*task.target_cm, "rx")
ax.plot(0, 0, "ks", label="arm base")
ax.set_aspect("equal")
ax.set_xlabel("x (cm)")
ax.set_ylabel("y (cm)")
ax.legend(loc="lower left")
ax.set_title(f"four-way jogs to target, seed 42 "
             f"({done.payload['completion_ms'] / 1000:.1f} s)")
fig.savefig("demos/output/07_reachability_loop.png", dpi=110, bbox_inches="tight")
print("wrote demos/output/07_reachability_loop.png")
