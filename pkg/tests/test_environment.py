"""Tests for force fields and channels."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

components = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


def _rotation(deg):
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, -s], [s, c]])


class TestCurlField:
    """Tests for the velocity-dependent curl field."""

    def test_clockwise_for_positive_gain(self):
        from fieldgen.core.environment import curl_force

        np.testing.assert_allclose(curl_force(15.0, [0.3, 0.0]), [0.0, -4.5])
        np.testing.assert_allclose(curl_force(15.0, [0.0, 0.2]), [3.0, 0.0])

    @given(vx=components, vy=components)
    def test_perpendicular_to_velocity(self, vx, vy):
        from fieldgen.core.environment import curl_force

        v = np.array([vx, vy])
        f = curl_force(15.0, v)
        assert abs(f @ v) < 1e-12
        assert np.linalg.norm(f) == pytest.approx(15.0 * np.linalg.norm(v), abs=1e-12)

    @given(vx=components, vy=components, angle=st.floats(min_value=-180, max_value=180))
    def test_rotation_equivariant(self, vx, vy, angle):
        from fieldgen.core.environment import curl_force

        R = _rotation(angle)
        v = np.array([vx, vy])
        np.testing.assert_allclose(R @ curl_force(15.0, v), curl_force(15.0, R @ v), atol=1e-12)

    def test_batch_velocities(self):
        from fieldgen.core.environment import curl_force

        v = np.array([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(curl_force(2.0, v), [[0.0, -2.0], [2.0, 0.0]])

    def test_field_spec_force_by_kind(self):
        from fieldgen.core.environment import FieldSpec

        v = np.array([0.1, 0.0])
        np.testing.assert_allclose(FieldSpec.curl(15.0).force(np.zeros(2), v), [0.0, -1.5])
        np.testing.assert_allclose(FieldSpec.null().force(np.zeros(2), v), [0.0, 0.0])

    def test_non_finite_gain_rejected(self):
        from fieldgen.core.environment import FieldSpec

        with pytest.raises(ValueError, match="finite"):
            FieldSpec.curl(float("nan"))

    def test_clamp_needs_channel(self):
        from fieldgen.core.environment import FieldKind, FieldSpec

        with pytest.raises(ValueError, match="channel"):
            FieldSpec(kind=FieldKind.CLAMP)


class TestChannelGeometry:
    """Tests for channel axis, normal and validation."""

    def test_normal_is_axis_rotated_counter_clockwise(self):
        from fieldgen.core.environment import ChannelGeometry

        geom = ChannelGeometry(origin=(0.0, 0.0), target=(0.1, 0.0))
        np.testing.assert_allclose(geom.axis, [1.0, 0.0])
        np.testing.assert_allclose(geom.normal, [0.0, 1.0])
        assert geom.lateral([0.05, 0.002]) == pytest.approx(0.002)
        assert geom.lateral_rate([0.3, -0.1]) == pytest.approx(-0.1)

    @pytest.mark.parametrize(
        "kwargs",
        [{"half_width": 0.0}, {"k_wall": -1.0}, {"b_wall": -0.1}, {"target": (0.0, 0.0)}],
    )
    def test_invalid_geometry_rejected(self, kwargs):
        from fieldgen.core.environment import ChannelGeometry

        params = {"origin": (0.0, 0.0), "target": (0.1, 0.0), **kwargs}
        with pytest.raises(ValueError):
            ChannelGeometry(**params)

    def test_rigid_is_the_default_mode(self):
        from fieldgen.core.environment import ChannelGeometry, ChannelMode, FieldSpec

        geom = ChannelGeometry(origin=(0.0, 0.0), target=(0.0, 0.1))
        assert geom.mode is ChannelMode.RIGID
        assert FieldSpec.clamp(geom).is_rigid_clamp


class TestSpringWalls:
    """Tests for the spring-damper channel walls."""

    @pytest.fixture
    def geom(self):
        from fieldgen.core.environment import ChannelGeometry, ChannelMode

        return ChannelGeometry(
            origin=(0.0, 0.0), target=(0.1, 0.0), half_width=0.0005,
            k_wall=5000.0, b_wall=5.0, mode=ChannelMode.SPRING,
        )

    def test_no_force_inside_free_play(self, geom):
        from fieldgen.core.environment import channel_force

        np.testing.assert_allclose(channel_force(geom, [0.05, 0.0004], [0.2, 0.5]), [0.0, 0.0])

    def test_restoring_force_beyond_wall(self, geom):
        from fieldgen.core.environment import channel_force

        np.testing.assert_allclose(channel_force(geom, [0.05, 0.0015], [0.2, 0.0]), [0.0, -5.0])
        np.testing.assert_allclose(channel_force(geom, [0.05, -0.0015], [0.2, 0.0]), [0.0, 5.0])

    def test_damping_adds_to_spring(self, geom):
        from fieldgen.core.environment import channel_force

        np.testing.assert_allclose(channel_force(geom, [0.05, 0.0015], [0.0, 0.4]), [0.0, -7.0])

    def test_walls_never_pull_outward(self, geom):
        from fieldgen.core.environment import channel_force

        # moving back toward the centre fast enough that damping would pull outward
        np.testing.assert_allclose(channel_force(geom, [0.05, 0.0015], [0.0, -2.0]), [0.0, 0.0])

    def test_field_spec_uses_walls_for_spring_clamp(self, geom):
        from fieldgen.core.environment import FieldSpec

        spec = FieldSpec.clamp(geom)
        assert not spec.is_rigid_clamp
        np.testing.assert_allclose(spec.force([0.05, 0.0015], [0.2, 0.0]), [0.0, -5.0])


class TestRigidChannel:
    """Tests for the constraint force of the rigid channel."""

    @pytest.fixture
    def setup(self, arm):
        from fieldgen.core.controllers import direction_vector
        from fieldgen.core.environment import ChannelGeometry

        axis = direction_vector(30.0)
        geom = ChannelGeometry(origin=(0.0, 0.0), target=tuple(0.1 * axis))
        return arm, geom, axis

    def _state(self, arm, p, v):
        from fieldgen.core.arm import inverse_kinematics, jacobian

        q = inverse_kinematics(arm, p)
        qd = np.linalg.solve(jacobian(arm, q), v)
        return q, qd

    def _hand_acceleration(self, arm, q, qd, tau, force):
        from fieldgen.core.arm import JointState, forward_dynamics, jacobian, jacobian_dot

        qdd = forward_dynamics(arm, JointState(q, qd), tau, force)
        return jacobian(arm, q) @ qdd + jacobian_dot(arm, q, qd) @ qd

    def test_cancels_lateral_acceleration_on_the_line(self, setup):
        from fieldgen.core.environment import channel_constraint_force

        arm, geom, axis = setup
        q, qd = self._state(arm, 0.03 * axis, 0.25 * axis)
        tau = np.array([1.5, -0.8])
        force = channel_constraint_force(geom, arm, q, qd, tau)
        a = self._hand_acceleration(arm, q, qd, tau, force)
        assert abs(geom.normal @ a) < 1e-8
        assert abs(force @ axis) < 1e-12

    def test_off_line_drift_is_pulled_back(self, setup):
        from fieldgen.core.environment import CONSTRAINT_OMEGA, channel_constraint_force

        arm, geom, axis = setup
        q, qd = self._state(arm, 0.03 * axis + 0.001 * geom.normal, 0.25 * axis)
        tau = np.zeros(2)
        force = channel_constraint_force(geom, arm, q, qd, tau)
        a = self._hand_acceleration(arm, q, qd, tau, force)
        assert geom.normal @ a == pytest.approx(-(CONSTRAINT_OMEGA**2) * 0.001, rel=1e-6)

    def test_other_forces_are_balanced(self, setup):
        from fieldgen.core.environment import channel_constraint_force, curl_force

        arm, geom, axis = setup
        q, qd = self._state(arm, 0.05 * axis, 0.4 * axis)
        push = curl_force(15.0, 0.4 * axis)
        force = channel_constraint_force(geom, arm, q, qd, np.zeros(2), push)
        a = self._hand_acceleration(arm, q, qd, np.zeros(2), force + push)
        assert abs(geom.normal @ a) < 1e-8


class TestRobotForceLoop:
    """Tests for the low-gain force loop of the manipulandum."""

    def test_perfect_measurement_renders_desired(self):
        from fieldgen.core.environment import robot_rendered_force

        np.testing.assert_allclose(robot_rendered_force([1.0, -2.0], [1.0, -2.0], 0.75), [1.0, -2.0])

    def test_shortfall_is_boosted_by_gain(self):
        from fieldgen.core.environment import robot_rendered_force

        np.testing.assert_allclose(robot_rendered_force([1.0, 0.0], [0.0, 0.0], 0.75), [1.75, 0.0])

    def test_negative_gain_rejected(self):
        from fieldgen.core.environment import robot_rendered_force

        with pytest.raises(ValueError):
            robot_rendered_force([1.0, 0.0], [0.0, 0.0], -0.1)

    def test_gain_per_field(self):
        from fieldgen.core.environment import FieldKind, robot_gain

        assert robot_gain(FieldKind.CURL) == 0.75
        assert robot_gain(FieldKind.NULL) == 0.5
        assert robot_gain("clamp") == 0.5
