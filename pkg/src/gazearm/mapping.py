"""Display-to-workspace calibration.

Nine (or any >= 3 non-collinear) correspondence pairs are collected by
dragging the arm tip to known spots and recording both the display pixel
and the arm-frame position in cm.  A least-squares affine

    robot = M @ display + o

is fitted over all pairs, with a pooled R^2 and an RMS residual in cm as
fit-quality metrics.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-9


class RankDeficientError(ValueError):
    """Fewer than 3 pairs, or display points are collinear."""


@dataclass(frozen=True)
class CorrespondencePair:
    display_pt: tuple[float, float]  # pixels
    robot_pt: tuple[float, float]  # cm, arm frame


@dataclass(frozen=True)
class AffineMap:
    matrix: np.ndarray  # 2x2
    offset: np.ndarray  # 2
    r_squared: float
    rmse_cm: float

    def to_json(self) -> dict:
        return {
            "matrix": self.matrix.tolist(),
            "offset": self.offset.tolist(),
            "r_squared": self.r_squared,
            "rmse_cm": self.rmse_cm,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AffineMap":
        return cls(
            matrix=np.asarray(obj["matrix"], dtype=float),
            offset=np.asarray(obj["offset"], dtype=float),
            r_squared=float(obj["r_squared"]),
            rmse_cm=float(obj["rmse_cm"]),
        )

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2)

    @classmethod
    def load(cls, path: str) -> "AffineMap":
        with open(path) as f:
            return cls.from_json(json.load(f))


def fit_mapping(pairs: list[CorrespondencePair]) -> AffineMap:
    """Least-squares affine minimizing sum ||M d_i + o - r_i||^2.

    R^2 is pooled over both output axes (1 - SSE/SST with per-axis means);
    RMSE is the root-mean-square Euclidean residual in cm.
    """
    if len(pairs) < 3:
        raise RankDeficientError("rank-deficient calibration: need >= 3 pairs")
    d = np.array([p.display_pt for p in pairs], dtype=float)
    r = np.array([p.robot_pt for p in pairs], dtype=float)
    if not (np.isfinite(d).all() and np.isfinite(r).all()):
        raise ValueError("non-finite calibration coordinates")

    a = np.column_stack([d, np.ones(len(pairs))])  # n x 3
    if np.linalg.matrix_rank(a, tol=RANK_TOL * max(1.0, np.abs(a).max())) < 3:
        raise RankDeficientError("rank-deficient calibration: collinear display points")

    coef, *_ = np.linalg.lstsq(a, r, rcond=None)  # 3 x 2
    matrix = coef[:2].T  # 2 x 2
    offset = coef[2]

    pred = d @ coef[:2] + offset
    resid = r - pred
    sse = float(np.sum(resid**2))
    sst = float(np.sum((r - r.mean(axis=0)) ** 2))
    r_squared = 1.0 if sst == 0.0 else 1.0 - sse / sst
    rmse_cm = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
    return AffineMap(matrix=matrix, offset=offset, r_squared=r_squared, rmse_cm=rmse_cm)


def map_point(m: AffineMap, display_pt: tuple[float, float]) -> tuple[float, float]:
    """Apply robot = M @ display + o to one display point."""
    p = np.asarray(display_pt, dtype=float)
    if not np.isfinite(p).all():
        raise ValueError("non-finite display point")
    out = m.matrix @ p + m.offset
    return (float(out[0]), float(out[1]))


def pairs_to_csv(pairs: list[CorrespondencePair], path: str) -> None:
    with open(path, "w") as f:
        f.write("dx_px,dy_px,rx_cm,ry_cm\n")
        for p in pairs:
            f.write(
                f"{p.display_pt[0]},{p.display_pt[1]},{p.robot_pt[0]},{p.robot_pt[1]}\n"
            )


def pairs_from_csv(path: str) -> list[CorrespondencePair]:
    pairs = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("dx_px"):
                continue
            dx, dy, rx, ry = (float(v) for v in line.split(","))
            pairs.append(CorrespondencePair((dx, dy), (rx, ry)))
    return pairs
