"""Smooth-pursuit calibration and the 9-block gaze classifier.

The display is tiled by a 3x3 grid of equal-area blocks.  A marker sweeps
the block centers in serpentine order; gaze vectors recorded while the
marker dwells inside a block are labeled with that block.  A small
feed-forward network (6 -> 256 -> 128 -> 9, rectifier hidden units,
softmax output) is then trained with mini-batch adaptive-moment updates on
a cross-entropy loss, stopping at the first epoch whose test-partition
accuracy reaches 90%.

Stopping on the *test* partition leaks the test set; that is the measured
protocol of the original system and is reproduced deliberately.  The
validation partition separately drives an early-stop patience.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .gaze import GazeSample
from .geometry import Rect

N_BLOCKS = 9
LAYER_SIZES = (6, 256, 128, 9)
SERPENTINE_ORDER = (0, 1, 2, 5, 4, 3, 6, 7, 8)
DEFAULT_SETTLE_MS = 300.0  # discard saccade-onset samples at block changes


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class ScreenGrid:
    """3x3 equal-area tiling of the display, blocks indexed row-major 0..8."""

    display_w: float
    display_h: float
    rows: int = 3
    cols: int = 3

    def block(self, i: int) -> Rect:
        if not 0 <= i < self.rows * self.cols:
            raise IndexError(f"block index {i} out of range")
        r, c = divmod(i, self.cols)
        bw = self.display_w / self.cols
        bh = self.display_h / self.rows
        return Rect(c * bw, r * bh, bw, bh)

    def block_at(self, x: float, y: float) -> int:
        c = min(int(x / self.display_w * self.cols), self.cols - 1)
        r = min(int(y / self.display_h * self.rows), self.rows - 1)
        return max(r, 0) * self.cols + max(c, 0)

    def centers(self) -> list[tuple[float, float]]:
        return [self.block(i).center for i in range(self.rows * self.cols)]


@dataclass(frozen=True)
class MarkerPath:
    """Timed marker schedule for smooth-pursuit calibration.

    The marker dwells `dwell_ms` at each block center (serpentine visit
    order) and moves linearly between centers over `transition_ms`.
    """

    order: tuple[int, ...]
    centers: tuple[tuple[float, float], ...]  # indexed by visit position
    dwell_ms: float
    transition_ms: float

    @property
    def duration_ms(self) -> float:
        n = len(self.order)
        return n * self.dwell_ms + (n - 1) * self.transition_ms

    def waypoints(self) -> list[tuple[float, float, float, int]]:
        """Dwell-phase endpoints as (t_ms, x, y, block_label)."""
        pts = []
        for j, (label, (cx, cy)) in enumerate(zip(self.order, self.centers)):
            start = j * (self.dwell_ms + self.transition_ms)
            pts.append((start, cx, cy, label))
            pts.append((start + self.dwell_ms, cx, cy, label))
        return pts

    def phase_at(self, t_ms: float) -> tuple[str, Optional[int], float]:
        """(phase kind, block label or None, ms into the phase)."""
        period = self.dwell_ms + self.transition_ms
        j = int(t_ms // period)
        if t_ms < 0 or j >= len(self.order):
            return ("done", None, 0.0)
        into = t_ms - j * period
        if into < self.dwell_ms:
            return ("dwell", self.order[j], into)
        if j == len(self.order) - 1:
            return ("done", None, 0.0)
        return ("transition", None, into - self.dwell_ms)

    def position_at(self, t_ms: float) -> tuple[float, float]:
        period = self.dwell_ms + self.transition_ms
        j = min(int(max(t_ms, 0.0) // period), len(self.order) - 1)
        into = t_ms - j * period
        cx, cy = self.centers[j]
        if into <= self.dwell_ms or j == len(self.order) - 1:
            return (cx, cy)
        nx, ny = self.centers[j + 1]
        u = min(max((into - self.dwell_ms) / self.transition_ms, 0.0), 1.0)
        return (cx + u * (nx - cx), cy + u * (ny - cy))

    def to_json(self) -> dict:
        return {
            "order": list(self.order),
            "centers": [list(c) for c in self.centers],
            "dwell_ms": self.dwell_ms,
            "transition_ms": self.transition_ms,
            "duration_ms": self.duration_ms,
            "waypoints": [list(w) for w in self.waypoints()],
        }


def make_marker_path(
    grid: ScreenGrid, dwell_ms: float, transition_ms: float
) -> MarkerPath:
    """Serpentine (boustrophedon) sweep over the block centers."""
    if dwell_ms <= 0:
        raise ValueError("dwell_ms must be positive")
    centers = grid.centers()
    return MarkerPath(
        order=SERPENTINE_ORDER,
        centers=tuple(centers[i] for i in SERPENTINE_ORDER),
        dwell_ms=dwell_ms,
        transition_ms=transition_ms,
    )


# --- calibration data -------------------------------------------------------


@dataclass
class CalibrationSet:
    """Labeled gaze vectors plus a stratified 70/15/15 partition."""

    vectors: np.ndarray  # (n, 6)
    labels: np.ndarray  # (n,)
    split: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.labels)

    def partition(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.split[name]
        return self.vectors[idx], self.labels[idx]

    def to_csv(self, path: str) -> None:
        names = np.empty(len(self.labels), dtype=object)
        for part, idx in self.split.items():
            names[idx] = part
        with open(path, "w") as f:
            f.write("gx0,gy0,gz0,gx1,gy1,gz1,label,split\n")
            for vec, label, part in zip(self.vectors, self.labels, names):
                f.write(",".join(str(v) for v in vec) + f",{label},{part}\n")

    @classmethod
    def from_csv(cls, path: str) -> "CalibrationSet":
        vecs, labels, parts = [], [], []
        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("gx0"):
                    continue
                cells = line.split(",")
                vecs.append([float(v) for v in cells[:6]])
                labels.append(int(cells[6]))
                parts.append(cells[7])
        split = {
            name: np.array([i for i, p in enumerate(parts) if p == name], dtype=int)
            for name in ("train", "val", "test")
        }
        return cls(
            vectors=np.asarray(vecs, dtype=float),
            labels=np.asarray(labels, dtype=int),
            split=split,
        )


def stratified_split(
    labels: np.ndarray, seed: Optional[int] = 0
) -> dict[str, np.ndarray]:
    """Shuffled per-class 70/15/15 partition; proportions within one example."""
    rng = np.random.default_rng(seed)
    train, val, test = [], [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        n = len(idx)
        n_train = round(0.70 * n)
        n_val = round(0.15 * n)
        train.extend(idx[:n_train])
        val.extend(idx[n_train : n_train + n_val])
        test.extend(idx[n_train + n_val :])
    return {
        "train": np.sort(np.array(train, dtype=int)),
        "val": np.sort(np.array(val, dtype=int)),
        "test": np.sort(np.array(test, dtype=int)),
    }


def collect_calibration(
    samples: Iterable[GazeSample],
    path: MarkerPath,
    settle_ms: float = DEFAULT_SETTLE_MS,
    seed: Optional[int] = 0,
) -> CalibrationSet:
    """Label time-aligned gaze vectors with the marker's current block.

    Transition-phase samples and the first `settle_ms` of every dwell are
    discarded, as are invalid samples and samples without gaze vectors.
    """
    vecs, labels = [], []
    for s in samples:
        if not s.valid or s.gaze_vec is None:
            continue
        kind, label, into = path.phase_at(s.t_ms)
        if kind != "dwell" or into < settle_ms:
            continue
        vecs.append(s.gaze_vec)
        labels.append(label)
    labels_arr = np.asarray(labels, dtype=int)
    retained = set(labels_arr.tolist())
    missing = [b for b in path.order if b not in retained]
    if missing:
        raise CalibrationError(
            f"insufficient calibration data: no samples for blocks {missing}"
        )
    vectors = np.asarray(vecs, dtype=float)
    return CalibrationSet(
        vectors=vectors, labels=labels_arr, split=stratified_split(labels_arr, seed)
    )


# --- classifier -------------------------------------------------------------


@dataclass(frozen=True)
class Hyperparameters:
    learning_rate: float = 1e-3
    batch_size: int = 32
    epoch_cap: int = 200
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    target_test_accuracy: float = 0.90
    val_patience: int = 30
    seed: Optional[int] = None


@dataclass
class BlockModel:
    """Trained feed-forward classifier; immutable once handed out."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    test_accuracy: float = 0.0
    epochs_run: int = 0
    converged: bool = False
    loss_history: list[float] = field(default_factory=list)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    def to_json(self) -> dict:
        return {
            "format": "gazearm-block-model-v1",
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],  # row-major
            "biases": [b.tolist() for b in self.biases],
            "metrics": {
                "test_accuracy": self.test_accuracy,
                "epochs_run": self.epochs_run,
                "converged": self.converged,
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BlockModel":
        if obj.get("format") != "gazearm-block-model-v1":
            raise ValueError("unrecognized model file format")
        metrics = obj.get("metrics", {})
        return cls(
            weights=[np.asarray(w, dtype=float) for w in obj["weights"]],
            biases=[np.asarray(b, dtype=float) for b in obj["biases"]],
            test_accuracy=metrics.get("test_accuracy", 0.0),
            epochs_run=metrics.get("epochs_run", 0),
            converged=metrics.get("converged", False),
        )

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, path: str) -> "BlockModel":
        with open(path) as f:
            return cls.from_json(json.load(f))


def prepare_features(vectors: np.ndarray) -> np.ndarray:
    """Re-normalize each eye's 3-vector to unit length (tracker drift guard)."""
    x = np.atleast_2d(np.asarray(vectors, dtype=float)).copy()
    for half in (slice(0, 3), slice(3, 6)):
        norms = np.linalg.norm(x[:, half], axis=1, keepdims=True)
        np.divide(x[:, half], norms, out=x[:, half], where=norms > 0)
    return x


def init_params(
    layer_sizes: Sequence[int] = LAYER_SIZES, seed: Optional[int] = None
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Uniform fan-in-scaled weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(
    weights: Sequence[np.ndarray], biases: Sequence[np.ndarray], x: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Returns (softmax probabilities, per-layer activations for backprop)."""
    acts = [x]
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        h = z if i == last else np.maximum(z, 0.0)
        acts.append(h)
    logits = acts[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    return probs, acts


def loss_and_grads(
    weights: Sequence[np.ndarray],
    biases: Sequence[np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean cross-entropy over the batch and its analytic gradients."""
    n = len(x)
    probs, acts = forward(weights, biases, x)
    eps = 1e-12
    loss = float(-np.mean(np.log(probs[np.arange(n), y] + eps)))

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads_w: list[np.ndarray] = [np.empty(0)] * len(weights)
    grads_b: list[np.ndarray] = [np.empty(0)] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (acts[i] > 0)
    return loss, grads_w, grads_b


class AdamState:
    """Adaptive-moment accumulator for one list of parameter arrays."""

    def __init__(self, params: Sequence[np.ndarray], hp: Hyperparameters):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self.hp = hp

    def step(self, params: list[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        hp = self.hp
        self.t += 1
        for i, g in enumerate(grads):
            self.m[i] = hp.beta1 * self.m[i] + (1 - hp.beta1) * g
            self.v[i] = hp.beta2 * self.v[i] + (1 - hp.beta2) * g * g
            m_hat = self.m[i] / (1 - hp.beta1**self.t)
            v_hat = self.v[i] / (1 - hp.beta2**self.t)
            params[i] -= hp.learning_rate * m_hat / (np.sqrt(v_hat) + hp.eps)


def _accuracy(
    weights: Sequence[np.ndarray],
    biases: Sequence[np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
) -> float:
    probs, _ = forward(weights, biases, x)
    return float(np.mean(probs.argmax(axis=1) == y))


def train(calib: CalibrationSet, hp: Hyperparameters = Hyperparameters()) -> BlockModel:
    """Mini-batch Adam on cross-entropy, stopping at the first epoch whose
    test-partition accuracy reaches the target (or at the epoch cap).

    The validation partition drives an additional early-stop patience.  A
    model that never reaches the target is returned with converged=False;
    the caller decides whether to recalibrate.
    """
    if len(calib) == 0:
        raise CalibrationError("empty calibration set")
    if not calib.split:
        raise CalibrationError("calibration set has no partition assignment")
    for part in ("train", "val", "test"):
        if part not in calib.split or len(calib.split[part]) == 0:
            raise CalibrationError(f"partition {part!r} missing or empty")
        present = set(np.unique(calib.labels[calib.split[part]]).tolist())
        if present != set(np.unique(calib.labels).tolist()):
            raise CalibrationError(f"partition {part!r} is missing classes")

    x_train, y_train = calib.partition("train")
    x_val, y_val = calib.partition("val")
    x_test, y_test = calib.partition("test")
    x_train = prepare_features(x_train)
    x_val = prepare_features(x_val)
    x_test = prepare_features(x_test)

    rng = np.random.default_rng(hp.seed)
    weights, biases = init_params(LAYER_SIZES, seed=rng.integers(2**32))
    adam_w = AdamState(weights, hp)
    adam_b = AdamState(biases, hp)

    loss_history: list[float] = []
    best_val = -1.0
    stale_epochs = 0
    test_acc = _accuracy(weights, biases, x_test, y_test)
    epochs_run = 0
    converged = test_acc >= hp.target_test_accuracy

    while not converged and epochs_run < hp.epoch_cap:
        order = rng.permutation(len(x_train))
        for start in range(0, len(order), hp.batch_size):
            batch = order[start : start + hp.batch_size]
            _, gw, gb = loss_and_grads(weights, biases, x_train[batch], y_train[batch])
            adam_w.step(weights, gw)
            adam_b.step(biases, gb)
        epochs_run += 1
        epoch_loss, _, _ = loss_and_grads(weights, biases, x_train, y_train)
        loss_history.append(epoch_loss)

        test_acc = _accuracy(weights, biases, x_test, y_test)
        if test_acc >= hp.target_test_accuracy:
            converged = True
            break

        val_acc = _accuracy(weights, biases, x_val, y_val)
        if val_acc > best_val:
            best_val = val_acc
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= hp.val_patience:
                break

    return BlockModel(
        weights=weights,
        biases=biases,
        test_accuracy=test_acc,
        epochs_run=epochs_run,
        converged=converged,
        loss_history=loss_history,
    )


def predict_proba(model: BlockModel, gaze_vec: Sequence[float]) -> np.ndarray:
    """Softmax block probabilities for one 6-vector; sums to 1."""
    vec = np.asarray(gaze_vec, dtype=float)
    if vec.shape != (6,):
        raise ValueError("expected a 6-vector")
    if not np.isfinite(vec).all():
        raise ValueError("non-finite gaze vector")
    x = prepare_features(vec)
    probs, _ = forward(model.weights, model.biases, x)
    return probs[0]


def predict(model: BlockModel, gaze_vec: Sequence[float]) -> int:
    """Most probable block index (0..8); deterministic for a fixed model."""
    return int(predict_proba(model, gaze_vec).argmax())


# --- synthetic data ---------------------------------------------------------


def block_centroids() -> np.ndarray:
    """Nine plausible per-eye direction pairs, one per screen block."""
    cents = []
    for i in range(N_BLOCKS):
        r, c = divmod(i, 3)
        horiz = (c - 1) * 0.35
        vert = (r - 1) * 0.25
        eye = np.array([horiz, vert, 1.0])
        eye = eye / np.linalg.norm(eye)
        cents.append(np.concatenate([eye, eye]))
    return np.array(cents)


def make_cluster_data(
    n_per_class: int = 100, sigma: float = 0.02, seed: Optional[int] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Well-separated Gaussian clusters in gaze-vector space, one per block."""
    rng = np.random.default_rng(seed)
    cents = block_centroids()
    xs, ys = [], []
    for label, c in enumerate(cents):
        xs.append(c + rng.normal(0.0, sigma, size=(n_per_class, 6)))
        ys.append(np.full(n_per_class, label, dtype=int))
    x = np.vstack(xs)
    y = np.concatenate(ys)
    return x, y


def make_cluster_set(
    n_per_class: int = 100, sigma: float = 0.02, seed: Optional[int] = None
) -> CalibrationSet:
    x, y = make_cluster_data(n_per_class, sigma, seed)
    return CalibrationSet(vectors=x, labels=y, split=stratified_split(y, seed))
