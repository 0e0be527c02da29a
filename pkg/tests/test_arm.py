import math

import numpy as np
import pytest

from gazearm.arm import (
    ArmGeometry,
    Handover,
    JointLimits,
    JointState,
    SingularConfigurationError,
    constant_height_delta,
    forward_tip,
    handover_alpha,
    planar_reach,
    tip_height,
)

from oracles import fd_constant_height_ratio, tip_height_direct

G = ArmGeometry()
G10 = ArmGeometry(a_cm=10.0, b_cm=10.0)


class TestTipHeight:
    def test_fully_extended(self):
        assert tip_height(G10, 180.0, 180.0) == pytest.approx(20.0)

    def test_right_angles_zero(self):
        assert tip_height(G10, 90.0, 90.0) == pytest.approx(0.0, abs=1e-12)

    def test_mixed_angles(self):
        # 10*cos(30) + 10*cos(60)
        assert tip_height(G10, 120.0, 150.0) == pytest.approx(13.660, abs=1e-3)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            alpha, beta = rng.uniform(0, 180, size=2)
            assert tip_height(G, alpha, beta) == pytest.approx(
                tip_height_direct(G.a_cm, G.b_cm, alpha, beta), abs=1e-12
            )

    def test_bounded_by_link_sum(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            alpha, beta = rng.uniform(0, 180, size=2)
            assert abs(tip_height(G, alpha, beta)) <= G.a_cm + G.b_cm + 1e-12


class TestConstantHeightDelta:
    def test_symmetric_ratio(self):
        assert constant_height_delta(G10, 70.0, 70.0, 1.0) == pytest.approx(-1.0)

    def test_asymmetric_links(self):
        g = ArmGeometry(a_cm=10.0, b_cm=5.0)
        assert constant_height_delta(g, 60.0, 120.0, 1.0) == pytest.approx(-0.5)

    def test_singular_configuration(self):
        with pytest.raises(SingularConfigurationError, match="singular"):
            constant_height_delta(G, 90.0, 180.0, 1.0)

    def test_agrees_with_finite_differences(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            alpha = rng.uniform(10.0, 170.0)
            beta = rng.uniform(10.0, 170.0)
            got = constant_height_delta(G, alpha, beta, 1.0)
            want = fd_constant_height_ratio(G.a_cm, G.b_cm, alpha, beta)
            assert got == pytest.approx(want, rel=1e-6)

    def test_stepping_preserves_height_to_second_order(self):
        rng = np.random.default_rng(3)
        d_alpha = 0.01
        for _ in range(500):
            alpha = rng.uniform(10.0, 170.0)
            beta = rng.uniform(10.0, 170.0)
            d_beta = constant_height_delta(G, alpha, beta, d_alpha)
            before = tip_height(G, alpha, beta)
            after = tip_height(G, alpha + d_alpha, beta + d_beta)
            assert abs(after - before) <= 1e-5 * (G.a_cm + G.b_cm)


class TestHandover:
    def test_at_ninety(self):
        assert handover_alpha(G, 90.0) == pytest.approx(144.855, abs=1e-9)

    def test_at_hundred(self):
        assert handover_alpha(G, 100.0) == pytest.approx(140.475, abs=1e-9)

    def test_at_one_twenty(self):
        assert handover_alpha(G, 120.0) == pytest.approx(131.715, abs=1e-9)

    def test_affine_differences(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            b1, b2 = rng.uniform(90.0, 180.0, size=2)
            lhs = handover_alpha(G, b1) - handover_alpha(G, b2)
            assert lhs == pytest.approx(-0.438 * (b1 - b2), abs=1e-9)

    def test_clamped_to_limits(self):
        g = ArmGeometry(limits={"base": JointLimits(), "alpha": JointLimits(0, 140),
                                "beta": JointLimits()})
        assert handover_alpha(g, 90.0) == 140.0


class TestForwardTip:
    def test_straight_up(self):
        pose = forward_tip(G, JointState(base_deg=45.0, alpha_deg=180.0, beta_deg=180.0))
        assert pose.x_cm == pytest.approx(0.0, abs=1e-12)
        assert pose.y_cm == pytest.approx(0.0, abs=1e-12)
        assert pose.z_cm == pytest.approx(G.base_height_cm + G.a_cm + G.b_cm)

    def test_planar_reach_forward(self):
        pose = forward_tip(G10, JointState(base_deg=0.0, alpha_deg=90.0, beta_deg=90.0))
        assert pose.x_cm == pytest.approx(20.0)
        assert pose.y_cm == pytest.approx(0.0, abs=1e-12)
        assert pose.z_cm == pytest.approx(G10.base_height_cm)

    def test_base_rotation_mirrors_axes(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            alpha, beta = rng.uniform(20, 160, size=2)
            p0 = forward_tip(G, JointState(base_deg=0.0, alpha_deg=alpha, beta_deg=beta))
            p90 = forward_tip(G, JointState(base_deg=90.0, alpha_deg=alpha, beta_deg=beta))
            assert p90.x_cm == pytest.approx(p0.y_cm, abs=1e-9)
            assert p90.y_cm == pytest.approx(p0.x_cm, abs=1e-9)

    def test_d_field_consistent(self):
        pose = forward_tip(G, JointState(base_deg=30.0, alpha_deg=130.0, beta_deg=110.0))
        assert pose.d_cm == pytest.approx(tip_height(G, 130.0, 110.0))

    def test_continuity(self):
        eps = 1e-6
        p0 = forward_tip(G, JointState(base_deg=45.0, alpha_deg=100.0, beta_deg=80.0))
        p1 = forward_tip(
            G, JointState(base_deg=45.0 + eps, alpha_deg=100.0 + eps, beta_deg=80.0 - eps)
        )
        assert math.hypot(p1.x_cm - p0.x_cm, p1.y_cm - p0.y_cm) < 1e-4
        assert abs(p1.z_cm - p0.z_cm) < 1e-4


class TestGeometryConfig:
    def test_json_round_trip(self, tmp_path):
        g = ArmGeometry(
            a_cm=11.0,
            b_cm=9.5,
            base_height_cm=5.0,
            limits={
                "base": JointLimits(10, 170),
                "alpha": JointLimits(0, 180),
                "beta": JointLimits(5, 175),
            },
            handover=Handover(c0=180.0, c1=0.45, beta_on_deg=92.0),
        )
        path = str(tmp_path / "geometry.json")
        g.save(path)
        assert ArmGeometry.load(path) == g

    def test_rejects_bad_links(self):
        with pytest.raises(ValueError):
            ArmGeometry(a_cm=0.0)

    def test_rejects_bad_limits(self):
        with pytest.raises(ValueError):
            ArmGeometry(limits={"base": JointLimits(-5, 200)})

    def test_default_fits_envelope(self):
        # the default links fold inside the 22 x 13.5 x 13 cm kit envelope
        assert G.a_cm + G.b_cm <= 22.0

    def test_derived_angles(self):
        s = JointState(alpha_deg=120.0, beta_deg=150.0)
        assert s.phi_deg == 30.0
        assert s.theta_deg == 60.0

    def test_planar_reach_examples(self):
        assert planar_reach(G10, 180.0, 180.0) == pytest.approx(0.0, abs=1e-12)
        assert planar_reach(G10, 90.0, 90.0) == pytest.approx(20.0)
