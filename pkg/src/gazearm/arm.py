"""4-DoF arm geometry and vertical-motion kinematics.

Joint conventions follow the hobby-servo build: all angles are degrees in
[0, 180].  The elbow pair is described by alpha (upper servo) and beta
(fore servo); the derived link angles are phi = 180 - beta and
theta = 180 - alpha.  The tip's vertical reach component is

    d = a*cos(phi) + b*cos(theta)

and holding d constant while stepping alpha gives

    d_beta/d_alpha = -(b*sin(alpha)) / (a*sin(beta)).

Above the empirical regime switch (beta >= 90 deg) the alpha servo is
slaved to an affine handover law alpha = c0 - c1*beta.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

SIN_SINGULAR_TOL = 1e-6


class SingularConfigurationError(ValueError):
    """Raised when |sin(beta)| is too small for constant-height stepping."""


@dataclass(frozen=True)
class JointLimits:
    lo_deg: float = 0.0
    hi_deg: float = 180.0

    def clamp(self, angle_deg: float) -> float:
        return min(max(angle_deg, self.lo_deg), self.hi_deg)

    def contains(self, angle_deg: float) -> bool:
        return self.lo_deg <= angle_deg <= self.hi_deg


@dataclass(frozen=True)
class Handover:
    """Empirical servo handover: alpha = c0 - c1*beta once beta >= beta_on."""

    c0: float = 184.275
    c1: float = 0.438
    beta_on_deg: float = 90.0


@dataclass(frozen=True)
class ArmGeometry:
    """Link lengths (cm) and joint limits of the desk arm.

    Defaults fit the 22 x 13.5 x 13 cm hobby kit envelope; real builds load
    their own numbers from a JSON config, including the device-specific
    handover coefficients.
    """

    a_cm: float = 10.5
    b_cm: float = 10.0
    base_height_cm: float = 6.0
    limits: dict[str, JointLimits] = field(
        default_factory=lambda: {
            "base": JointLimits(),
            "alpha": JointLimits(),
            "beta": JointLimits(),
        }
    )
    handover: Handover = Handover()

    def __post_init__(self) -> None:
        if self.a_cm <= 0 or self.b_cm <= 0:
            raise ValueError("link lengths must be positive")
        for name, lim in self.limits.items():
            if lim.lo_deg < 0.0 or lim.hi_deg > 180.0 or lim.lo_deg > lim.hi_deg:
                raise ValueError(f"joint limit for {name!r} outside servo range")

    @property
    def max_reach_cm(self) -> float:
        return self.a_cm + self.b_cm

    def to_json(self) -> dict:
        return {
            "a_cm": self.a_cm,
            "b_cm": self.b_cm,
            "base_height_cm": self.base_height_cm,
            "limits": {
                k: {"lo_deg": v.lo_deg, "hi_deg": v.hi_deg}
                for k, v in self.limits.items()
            },
            "handover": {
                "c0": self.handover.c0,
                "c1": self.handover.c1,
                "beta_on_deg": self.handover.beta_on_deg,
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ArmGeometry":
        limits = {
            k: JointLimits(v["lo_deg"], v["hi_deg"])
            for k, v in obj.get("limits", {}).items()
        }
        defaults = cls()
        for name in ("base", "alpha", "beta"):
            limits.setdefault(name, JointLimits())
        ho = obj.get("handover", {})
        return cls(
            a_cm=obj.get("a_cm", defaults.a_cm),
            b_cm=obj.get("b_cm", defaults.b_cm),
            base_height_cm=obj.get("base_height_cm", defaults.base_height_cm),
            limits=limits,
            handover=Handover(
                c0=ho.get("c0", 184.275),
                c1=ho.get("c1", 0.438),
                beta_on_deg=ho.get("beta_on_deg", 90.0),
            ),
        )

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2)

    @classmethod
    def load(cls, path: str) -> "ArmGeometry":
        with open(path) as f:
            return cls.from_json(json.load(f))


@dataclass(frozen=True)
class JointState:
    """Commanded/held joint angles.  phi and theta are always derived."""

    base_deg: float = 90.0
    alpha_deg: float = 90.0
    beta_deg: float = 90.0
    gripper_closed: bool = False

    @property
    def phi_deg(self) -> float:
        return 180.0 - self.beta_deg

    @property
    def theta_deg(self) -> float:
        return 180.0 - self.alpha_deg

    def within(self, g: ArmGeometry) -> bool:
        return (
            g.limits["base"].contains(self.base_deg)
            and g.limits["alpha"].contains(self.alpha_deg)
            and g.limits["beta"].contains(self.beta_deg)
        )

    def with_angles(self, **kw: float) -> "JointState":
        return replace(self, **kw)


@dataclass(frozen=True)
class TipPose:
    x_cm: float
    y_cm: float
    z_cm: float
    d_cm: float


def tip_height(g: ArmGeometry, alpha_deg: float, beta_deg: float) -> float:
    """Vertical reach component d = a*cos(phi) + b*cos(theta), in cm."""
    phi = math.radians(180.0 - beta_deg)
    theta = math.radians(180.0 - alpha_deg)
    return g.a_cm * math.cos(phi) + g.b_cm * math.cos(theta)


def planar_reach(g: ArmGeometry, alpha_deg: float, beta_deg: float) -> float:
    """Radial distance of the tip from the base axis, r = a*sin(phi) + b*sin(theta)."""
    phi = math.radians(180.0 - beta_deg)
    theta = math.radians(180.0 - alpha_deg)
    return g.a_cm * math.sin(phi) + g.b_cm * math.sin(theta)


def constant_height_delta(
    g: ArmGeometry, alpha_deg: float, beta_deg: float, d_alpha_deg: float
) -> float:
    """Beta increment that keeps the tip height fixed for a small alpha step.

    Raises SingularConfigurationError near sin(beta) = 0; never extrapolates
    silently through the singularity.
    """
    sin_beta = math.sin(math.radians(beta_deg))
    if abs(sin_beta) <= SIN_SINGULAR_TOL:
        raise SingularConfigurationError("singular configuration")
    sin_alpha = math.sin(math.radians(alpha_deg))
    return d_alpha_deg * (-(g.b_cm * sin_alpha) / (g.a_cm * sin_beta))


def handover_alpha(g: ArmGeometry, beta_deg: float) -> float:
    """Alpha commanded by the handover law, clamped to the alpha servo limits.

    Callers apply this in the beta >= beta_on regime; below it alpha is
    driven independently or by the differential rule.
    """
    alpha = g.handover.c0 - g.handover.c1 * beta_deg
    return g.limits["alpha"].clamp(alpha)


def forward_tip(g: ArmGeometry, s: JointState) -> TipPose:
    """Tip pose in the arm frame: base rotation sweeps the planar reach."""
    d = tip_height(g, s.alpha_deg, s.beta_deg)
    r = planar_reach(g, s.alpha_deg, s.beta_deg)
    base = math.radians(s.base_deg)
    return TipPose(
        x_cm=r * math.cos(base),
        y_cm=r * math.sin(base),
        z_cm=g.base_height_cm + d,
        d_cm=d,
    )
