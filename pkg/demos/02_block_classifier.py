"""Smooth-pursuit calibration and block classification.

A marker sweeps the nine screen blocks in serpentine order while synthetic
gaze vectors track it.  The labeled vectors are split 70/15/15 and a
6-256-128-9 network trains until the test partition hits 90% accuracy.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gazearm.blocks import (
    Hyperparameters,
    ScreenGrid,
    block_centroids,
    collect_calibration,
    make_marker_path,
    predict,
    train,
)
from gazearm.gaze import SAMPLE_PERIOD_MS, GazeSample

grid = ScreenGrid(1920, 1080)
path = make_marker_path(grid, dwell_ms=2000, transition_ms=500)
print(f"marker path: {path.duration_ms:.0f} ms over blocks {path.order}")

rng = np.random.default_rng(2)
cents = block_centroids()
samples = []
t = SAMPLE_PERIOD_MS
while t < path.duration_ms:
    kind, label, _ = path.phase_at(t)
    vec = cents[label if label is not None else 4] + rng.normal(0, 0.02, 6)
    samples.append(GazeSample(t_ms=t, gaze_vec=tuple(vec)))
    t += SAMPLE_PERIOD_MS

calib = collect_calibration(samples, path, settle_ms=300, seed=2)
print(f"retained {len(calib)} labeled vectors "
      f"({np.bincount(calib.labels, minlength=9)} per block)")

model = train(calib, Hyperparameters(seed=2))
print(f"trained: test accuracy {model.test_accuracy:.3f} "
      f"in {model.epochs_run} epochs (converged={model.converged})")

x_test, y_test = calib.partition("test")
confusion = np.zeros((9, 9), dtype=int)
for vec, label in zip(x_test, y_test):
    confusion[label, predict(model, vec)] += 1

fig, ax = plt.subplots(figsize=(5.5, 5))
im = ax.imshow(confusion, cmap="Blues")
ax.set_xlabel("predicted block")
ax.set_ylabel("true block")
ax.set_title(f"test confusion (accuracy {model.test_accuracy:.2f})")
for i in range(9):
    for j in range(9):
        if confusion[i, j]:
            ax.text(j, i, confusion[i, j], ha="center", va="center", fontsize=8)
fig.colorbar(im, shrink=0.8)
fig.savefig("demos/output/02_block_classifier.png", dpi=110, bbox_inches="tight")
print("wrote demos/output/02_block_classifier.png")
