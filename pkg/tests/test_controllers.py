"""Tests for desired trajectories and the two controllers."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

TIMES = np.linspace(0.0, 0.375, 751)


class TestAngles:
    """Tests for angle helpers."""

    @pytest.mark.parametrize(
        "angle, expected",
        [(180.0, 180.0), (-180.0, 180.0), (190.0, -170.0), (360.0, 0.0), (-45.0, -45.0), (315.0, -45.0)],
    )
    def test_wrap_deg(self, angle, expected):
        from fieldgen.core.controllers import wrap_deg

        assert wrap_deg(angle) == pytest.approx(expected)

    def test_wrap_deg_arrays(self):
        from fieldgen.core.controllers import wrap_deg

        np.testing.assert_allclose(wrap_deg(np.array([0.0, 270.0, -270.0])), [0.0, -90.0, 90.0])

    def test_direction_vector(self):
        from fieldgen.core.controllers import direction_vector

        np.testing.assert_allclose(direction_vector(90.0), [0.0, 1.0], atol=1e-15)


class TestRepresentation:
    """Tests for Gaussian representations of the learned field."""

    def test_peak_sits_at_offset(self):
        from fieldgen.core.controllers import ModelKind, RepresentationParams

        rep = RepresentationParams(ModelKind.STANDARD, 0.8, 30.0, 90.0, 20.0)
        assert rep.fraction(110.0) == pytest.approx(0.8)
        assert rep.fraction(140.0) == pytest.approx(0.8 * np.exp(-30.0**2 / (2 * 30.0**2)))

    @given(delta=st.floats(min_value=0.0, max_value=180.0), train=st.sampled_from([0, 45, 180, 315]))
    def test_impedance_representation_is_symmetric(self, delta, train):
        from fieldgen.core.controllers import ModelKind, RepresentationParams

        rep = RepresentationParams(ModelKind.IMPEDANCE, 1.0, 40.0, train)
        assert rep.fraction(train + delta) == pytest.approx(rep.fraction(train - delta), abs=1e-12)

    def test_wraps_around_the_circle(self):
        from fieldgen.core.controllers import ModelKind, RepresentationParams

        rep = RepresentationParams(ModelKind.IMPEDANCE, 1.0, 40.0, 0.0)
        assert rep.fraction(315.0) == pytest.approx(rep.fraction(45.0))

    def test_standard_defaults_to_zero_offset(self):
        from fieldgen.core.controllers import ModelKind, RepresentationParams

        assert RepresentationParams(ModelKind.STANDARD, 1.0, 40.0, 0.0).mu == 0.0

    def test_impedance_rejects_offset(self):
        from fieldgen.core.controllers import ModelKind, RepresentationParams

        with pytest.raises(ValueError, match="no offset"):
            RepresentationParams(ModelKind.IMPEDANCE, 1.0, 40.0, 0.0, 10.0)

    def test_width_must_be_positive(self):
        from fieldgen.core.controllers import ModelKind, RepresentationParams

        with pytest.raises(ValueError):
            RepresentationParams(ModelKind.STANDARD, 1.0, 0.0, 0.0)

    def test_negative_scaling_rejected(self):
        from fieldgen.core.controllers import ImpedanceScaling

        with pytest.raises(ValueError):
            ImpedanceScaling(-0.1, 0.5)

    def test_scaling_defaults_to_baseline_gains(self):
        from fieldgen.core.controllers import B_NOMINAL, K_NOMINAL, ImpedanceScaling

        scaling = ImpedanceScaling()
        np.testing.assert_allclose(scaling.stiffness, 0.7278 * K_NOMINAL)
        np.testing.assert_allclose(scaling.damping, 0.0723 * B_NOMINAL)


class TestMinimumJerk:
    """Tests for the minimum-jerk profile."""

    def test_boundary_conditions(self):
        from fieldgen.core.controllers import min_jerk_profile

        s, sd, sdd = min_jerk_profile(0.375, np.array([0.0, 0.375]))
        np.testing.assert_allclose(s, [0.0, 1.0])
        np.testing.assert_allclose(sd, [0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(sdd, [0.0, 0.0], atol=1e-9)

    def test_peak_speed_at_midpoint(self):
        from fieldgen.core.controllers import min_jerk

        _, v, _ = min_jerk([0.0, 0.0], [0.1, 0.0], 0.375, TIMES)
        speed = np.linalg.norm(v, axis=1)
        assert TIMES[int(np.argmax(speed))] == pytest.approx(0.1875)
        assert speed.max() == pytest.approx(1.875 * 0.1 / 0.375)

    def test_holds_after_movement_time(self):
        from fieldgen.core.controllers import min_jerk_profile

        s, sd, _ = min_jerk_profile(0.375, np.array([0.4, 0.5]))
        np.testing.assert_allclose(s, [1.0, 1.0])
        np.testing.assert_allclose(sd, [0.0, 0.0])

    def test_non_positive_movement_time_rejected(self):
        from fieldgen.core.controllers import min_jerk_profile

        with pytest.raises(ValueError):
            min_jerk_profile(0.0, 0.1)


class TestPlans:
    """Tests for straight and curved desired trajectories."""

    def test_straight_plan_joint_image_is_consistent(self, arm):
        from fieldgen.core.controllers import straight_plan

        plan = straight_plan(arm, (0.0, 0.0), (0.0, 0.1), 0.375, TIMES)
        assert plan.consistency_error(arm) < 1e-10

    def test_curved_plan_peak_error(self, arm):
        from fieldgen.core.analysis import lateral_deviation
        from fieldgen.core.controllers import curved_plan

        plan = curved_plan(arm, (0.0, 0.0), (0.1, 0.0), 0.375, 0.004, TIMES)
        deviation = lateral_deviation(plan.p, (0.0, 0.0), (0.1, 0.0))
        assert deviation.max() == pytest.approx(0.004, abs=1e-9)
        assert deviation[0] == pytest.approx(0.0) and deviation[-1] == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(plan.p[-1], [0.1, 0.0], atol=1e-12)

    def test_negative_peak_error_curves_clockwise(self, arm):
        from fieldgen.core.analysis import lateral_deviation
        from fieldgen.core.controllers import curved_plan

        plan = curved_plan(arm, (0.0, 0.0), (0.0, 0.1), 0.375, -0.006, TIMES)
        assert lateral_deviation(plan.p, (0.0, 0.0), (0.0, 0.1)).min() == pytest.approx(-0.006, abs=1e-9)

    def test_resample_holds_final_posture(self, arm):
        from fieldgen.core.controllers import straight_plan

        plan = straight_plan(arm, (0.0, 0.0), (0.1, 0.0), 0.375, TIMES)
        later = plan.resample(arm, np.array([0.2, 0.45, 0.5]))
        np.testing.assert_allclose(later.p[1:], [[0.1, 0.0], [0.1, 0.0]], atol=1e-12)
        np.testing.assert_allclose(later.v[1:], 0.0)
        np.testing.assert_allclose(later.qd[1:], 0.0, atol=1e-12)

    def test_curved_baselines_missing_direction(self, arm):
        from fieldgen.core.controllers import CurvedBaselines
        from fieldgen.core.exceptions import MissingBaselineError

        baselines = CurvedBaselines(peak_errors_mm={0: 4.0})
        assert baselines.plan_for(arm, 0.0, TIMES).p.shape == (len(TIMES), 2)
        with pytest.raises(MissingBaselineError, match="45"):
            baselines.plan_for(arm, 45.0, TIMES)

    def test_sampled_baselines_missing_direction(self, arm):
        from fieldgen.core.controllers import SampledBaselines, straight_plan
        from fieldgen.core.exceptions import MissingBaselineError

        baselines = SampledBaselines({0: straight_plan(arm, (0.0, 0.0), (0.1, 0.0), 0.375, TIMES)})
        with pytest.raises(MissingBaselineError):
            baselines.plan_for(arm, 90.0, TIMES)


class TestControllers:
    """Tests for the torque policies."""

    def test_standard_torque_is_inverse_dynamics_without_representation(self, arm):
        from fieldgen.core.arm import coriolis_matrix, inertia_matrix
        from fieldgen.core.controllers import standard_controller

        ctrl = standard_controller(arm, None, 0.0, 15.0, (0.0, 0.0), (0.1, 0.0), TIMES)
        assert ctrl.alpha_hat == 0.0
        i = 300
        q, qd, qdd = ctrl.desired.q[i], ctrl.desired.qd[i], ctrl.desired.qdd[i]
        expected = inertia_matrix(arm, q) @ qdd + coriolis_matrix(arm, q, qd) @ qd
        np.testing.assert_allclose(ctrl.torque(i, q, qd), expected, atol=1e-12)

    def test_standard_compensation_cancels_the_field(self, arm):
        from fieldgen.core.arm import jacobian
        from fieldgen.core.controllers import ModelKind, RepresentationParams, standard_controller
        from fieldgen.core.environment import curl_force

        rep = RepresentationParams(ModelKind.STANDARD, 1.0, 30.0, 0.0)
        ctrl = standard_controller(arm, rep, 0.0, 15.0, (0.0, 0.0), (0.1, 0.0), TIMES)
        bare = standard_controller(arm, None, 0.0, 15.0, (0.0, 0.0), (0.1, 0.0), TIMES)
        assert ctrl.alpha_hat == pytest.approx(15.0)
        i = 375
        q, qd = ctrl.desired.q[i], ctrl.desired.qd[i]
        J = jacobian(arm, q)
        field_torque = J.T @ curl_force(15.0, J @ qd)
        np.testing.assert_allclose(ctrl.torque(i, q, qd) + field_torque, bare.torque(i, q, qd), atol=1e-12)

    def test_impedance_feedback_vanishes_on_plan(self, arm):
        from fieldgen.core.controllers import (
            CurvedBaselines,
            ImpedanceScaling,
            impedance_controller,
            standard_controller,
        )

        baselines = CurvedBaselines(peak_errors_mm={90: 0.0})
        ctrl = impedance_controller(arm, None, ImpedanceScaling(), baselines, 90.0, 15.0, TIMES)
        ref = standard_controller(arm, None, 90.0, 15.0, (0.0, 0.0), (0.0, 0.1), TIMES)
        i = 200
        q, qd = ctrl.desired.q[i], ctrl.desired.qd[i]
        np.testing.assert_allclose(ctrl.torque(i, q, qd), ref.torque(i, q, qd), atol=1e-9)

    def test_impedance_feedback_restores_posture(self, arm):
        from fieldgen.core.controllers import (
            K_NOMINAL,
            CurvedBaselines,
            ImpedanceScaling,
            impedance_controller,
        )

        baselines = CurvedBaselines(peak_errors_mm={90: 0.0})
        scaling = ImpedanceScaling(1.0, 0.0)
        ctrl = impedance_controller(arm, None, scaling, baselines, 90.0, 15.0, TIMES)
        i = 0
        q, qd = ctrl.desired.q[i], ctrl.desired.qd[i]
        dq = np.array([0.01, 0.0])
        diff = ctrl.torque(i, q + dq, qd) - ctrl.torque(i, q, qd)
        # desired acceleration and velocity are zero at onset, leaving only the stiffness
        np.testing.assert_allclose(diff, -K_NOMINAL @ dq, atol=1e-6)

    def test_model_mismatch_rejected(self, arm):
        from fieldgen.core.controllers import (
            CurvedBaselines,
            ImpedanceScaling,
            ModelKind,
            RepresentationParams,
            impedance_controller,
            standard_controller,
        )

        std = RepresentationParams(ModelKind.STANDARD, 1.0, 30.0, 0.0)
        imp = RepresentationParams(ModelKind.IMPEDANCE, 1.0, 30.0, 0.0)
        with pytest.raises(ValueError):
            standard_controller(arm, imp, 0.0, 15.0, (0.0, 0.0), (0.1, 0.0), TIMES)
        with pytest.raises(ValueError):
            impedance_controller(
                arm, std, ImpedanceScaling(), CurvedBaselines(peak_errors_mm={0: 0.0}), 0.0, 15.0, TIMES
            )
