"""Small planar geometry helpers shared by the pipeline, UI and planner."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, origin at top-left, sizes in the same unit as x/y."""

    x: float
    y: float
    w: float
    h: float

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px <= self.x + self.w and self.y <= py <= self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class Bounds:
    """Closed planar rectangle [x_min, x_max] x [y_min, y_max], used for
    display clamping (pixels) and workspace clamping (cm)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def clamp(self, px: float, py: float) -> tuple[float, float]:
        return (
            min(max(px, self.x_min), self.x_max),
            min(max(py, self.y_min), self.y_max),
        )

    def contains(self, px: float, py: float) -> bool:
        return self.x_min <= px <= self.x_max and self.y_min <= py <= self.y_max

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)


def display_bounds(width: float, height: float) -> Bounds:
    return Bounds(0.0, 0.0, width, height)
