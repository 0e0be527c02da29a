"""Vertical-motion kinematics of the 4-DoF arm.

Shows the tip-height surface d(alpha, beta), a constant-height sweep that
steps beta by the differential rule while alpha advances (the tip height
stays flat), and the affine servo handover line above beta = 90 degrees.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gazearm.arm import (
    ArmGeometry,
    constant_height_delta,
    handover_alpha,
    tip_height,
)

g = ArmGeometry()
print(f"links a={g.a_cm} cm, b={g.b_cm} cm; handover "
      f"alpha = {g.handover.c0} - {g.handover.c1}*beta from beta >= "
      f"{g.handover.beta_on_deg} deg")

fig, axes = plt.subplots(1, 3, figsize=(15, 4.2))

# d over the joint space
alphas = np.linspace(0, 180, 121)
betas = np.linspace(0, 180, 121)
aa, bb = np.meshgrid(alphas, betas)
dd = np.vectorize(lambda a, b: tip_height(g, a, b))(aa, bb)
im = axes[0].contourf(aa, bb, dd, levels=21, cmap="viridis")
axes[0].set_xlabel("alpha (deg)")
axes[0].set_ylabel("beta (deg)")
axes[0].set_title("tip height d (cm)")
fig.colorbar(im, ax=axes[0], shrink=0.9)

# constant-height stepping: d stays put to second order
alpha, beta = 100.0, 70.0
heights, alphas_walked = [tip_height(g, alpha, beta)], [alpha]
for _ in range(80):
    beta += constant_height_delta(g, alpha, beta, 0.5)
    alpha += 0.5
    alphas_walked.append(alpha)
    heights.append(tip_height(g, alpha, beta))
axes[1].plot(alphas_walked, heights, "-o", ms=2)
axes[1].set_xlabel("alpha (deg)")
axes[1].set_ylabel("d (cm)")
axes[1].set_ylim(heights[0] - 1, heights[0] + 1)
axes[1].set_title("constant-height stepping (0.5 deg steps)")
print(f"height drift over 80 steps: {abs(heights[-1] - heights[0]):.2e} cm")

# the handover law
betas_h = np.linspace(90, 180, 50)
axes[2].plot(betas_h, [handover_alpha(g, b) for b in betas_h], lw=2)
axes[2].set_xlabel("beta (deg)")
axes[2].set_ylabel("alpha (deg)")
axes[2].set_title("servo handover line")
axes[2].annotate(f"alpha(90) = {handover_alpha(g, 90):.3f}", (90, handover_alpha(g, 90)),
                 xytext=(100, 150), arrowprops={"arrowstyle": "->"})

fig.savefig("demos/output/03_arm_kinematics.png", dpi=110, bbox_inches="tight")
print("wrote demos/output/03_arm_kinematics.png")
