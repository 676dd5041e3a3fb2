"""Tests for arm kinematics and dynamics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

angles = st.floats(min_value=-np.pi, max_value=np.pi, allow_nan=False)
elbows = st.floats(min_value=0.1, max_value=3.0, allow_nan=False)
speeds = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)


def _grid(n=1000, seed=0):
    rng = np.random.default_rng(seed)
    q = np.column_stack([rng.uniform(-np.pi, np.pi, n), rng.uniform(0.1, 3.0, n)])
    qd = rng.uniform(-5.0, 5.0, (n, 2))
    return q, qd


class TestArmParams:
    """Tests for parameter validation."""

    def test_defaults_place_hand_at_origin(self, arm):
        from fieldgen.core.arm import HOME_POSTURE, forward_kinematics

        np.testing.assert_allclose(forward_kinematics(arm, HOME_POSTURE), [0.0, 0.0], atol=1e-12)

    def test_with_home_moves_the_base(self):
        from fieldgen.core.arm import HOME_POSTURE, ArmParams, forward_kinematics

        params = ArmParams.with_home((0.1, -0.2))
        np.testing.assert_allclose(forward_kinematics(params, HOME_POSTURE), [0.1, -0.2], atol=1e-12)

    def test_uniform_rod_inertia_default(self, arm):
        assert arm.i1 == pytest.approx(arm.m1 * arm.l1**2 / 12.0)
        assert arm.i2 == pytest.approx(arm.m2 * arm.l2**2 / 12.0)

    @pytest.mark.parametrize("kwargs", [{"m1": 0.0}, {"l2": -0.3}, {"i1": 0.0}])
    def test_non_positive_values_rejected(self, kwargs):
        from fieldgen.core.arm import ArmParams

        with pytest.raises(ValueError):
            ArmParams(**kwargs)

    def test_centre_of_mass_beyond_link_rejected(self):
        from fieldgen.core.arm import ArmParams

        with pytest.raises(ValueError, match="exceeds link length"):
            ArmParams(r1=0.5)


class TestKinematics:
    """Tests for FK, IK and the Jacobian."""

    def test_ik_inverts_fk_on_grid(self, arm):
        from fieldgen.core.arm import forward_kinematics, inverse_kinematics

        q, _ = _grid()
        p = forward_kinematics(arm, q)
        q_back = inverse_kinematics(arm, p)
        np.testing.assert_allclose(forward_kinematics(arm, q_back), p, atol=1e-10)
        # elbow-flexed branch recovers the elbow angle itself
        np.testing.assert_allclose(q_back[:, 1], q[:, 1], atol=1e-7)

    @given(q1=angles, q2=elbows)
    def test_ik_inverts_fk(self, q1, q2):
        from fieldgen.core.arm import ArmParams, forward_kinematics, inverse_kinematics

        params = ArmParams()
        p = forward_kinematics(params, [q1, q2])
        np.testing.assert_allclose(
            forward_kinematics(params, inverse_kinematics(params, p)), p, atol=1e-10
        )

    def test_unreachable_target_raises(self, arm):
        from fieldgen.core.arm import inverse_kinematics
        from fieldgen.core.exceptions import UnreachableTargetError

        with pytest.raises(UnreachableTargetError, match="reachable annulus"):
            inverse_kinematics(arm, arm.base + np.array([0.8, 0.0]))
        with pytest.raises(UnreachableTargetError):
            inverse_kinematics(arm, arm.base)

    def test_unreachable_is_a_value_error(self, arm):
        from fieldgen.core.arm import inverse_kinematics

        with pytest.raises(ValueError):
            inverse_kinematics(arm, arm.base + np.array([0.0, 1.0]))

    def test_jacobian_matches_finite_differences(self, arm):
        from fieldgen.core.arm import forward_kinematics, jacobian

        q, _ = _grid()
        eps = 1e-6
        J = jacobian(arm, q)
        for j in range(2):
            dq = np.zeros(2)
            dq[j] = eps
            fd = (forward_kinematics(arm, q + dq) - forward_kinematics(arm, q - dq)) / (2 * eps)
            np.testing.assert_allclose(J[:, :, j], fd, atol=1e-7)

    def test_jacobian_dot_matches_finite_differences(self, arm):
        from fieldgen.core.arm import jacobian, jacobian_dot

        q, qd = _grid(seed=1)
        eps = 1e-6
        fd = (jacobian(arm, q + eps * qd) - jacobian(arm, q - eps * qd)) / (2 * eps)
        np.testing.assert_allclose(jacobian_dot(arm, q, qd), fd, atol=1e-6)

    def test_hand_and_joint_states_round_trip(self, arm):
        from fieldgen.core.arm import JointState, hand_state, joint_state

        q, qd = _grid(n=200, seed=2)
        qdd = np.random.default_rng(3).uniform(-20, 20, (200, 2))
        back = joint_state(arm, hand_state(arm, JointState(q, qd, qdd)))
        np.testing.assert_allclose(back.qd, qd, atol=1e-8)
        np.testing.assert_allclose(back.qdd, qdd, atol=1e-6)


class TestDynamics:
    """Tests for the rigid-body model."""

    def test_inertia_is_symmetric_positive_definite(self, arm):
        from fieldgen.core.arm import inertia_matrix

        q, _ = _grid()
        I = inertia_matrix(arm, q)
        np.testing.assert_allclose(I, np.swapaxes(I, -1, -2), atol=1e-14)
        assert np.all(np.linalg.eigvalsh(I) > 0)

    def test_inertia_dot_minus_twice_coriolis_is_skew(self, arm):
        from fieldgen.core.arm import coriolis_matrix, inertia_matrix_dot

        q, qd = _grid()
        N = inertia_matrix_dot(arm, q, qd) - 2.0 * coriolis_matrix(arm, q, qd)
        np.testing.assert_allclose(N + np.swapaxes(N, -1, -2), 0.0, atol=1e-9)

    @settings(max_examples=200)
    @given(q1=angles, q2=elbows, w1=speeds, w2=speeds)
    def test_inertia_dot_matches_finite_differences(self, q1, q2, w1, w2):
        from fieldgen.core.arm import ArmParams, inertia_matrix, inertia_matrix_dot

        params = ArmParams()
        q, qd = np.array([q1, q2]), np.array([w1, w2])
        eps = 1e-6
        fd = (inertia_matrix(params, q + eps * qd) - inertia_matrix(params, q - eps * qd)) / (2 * eps)
        np.testing.assert_allclose(inertia_matrix_dot(params, q, qd), fd, atol=1e-6)

    def test_unforced_motion_conserves_energy(self, arm):
        from fieldgen.core.arm import JointState, forward_dynamics, inertia_matrix
        from fieldgen.core.trial import integrate_fixed_step

        def f(t, x):
            return np.concatenate([x[2:], forward_dynamics(arm, JointState(x[:2], x[2:]), np.zeros(2))])

        x0 = np.array([0.6, 1.4, 1.0, -1.5])
        _, states = integrate_fixed_step(f, x0, 5000, 1e-4, stride=500)
        qd = states[:, 2:]
        energy = 0.5 * np.einsum("ni,nij,nj->n", qd, inertia_matrix(arm, states[:, :2]), qd)
        assert np.max(np.abs(energy - energy[0])) / energy[0] < 1e-6

    def test_external_force_enters_through_jacobian_transpose(self, arm):
        from fieldgen.core.arm import HOME_POSTURE, JointState, forward_dynamics, jacobian

        J = jacobian(arm, HOME_POSTURE)
        force = np.array([3.0, -2.0])
        rest = JointState(HOME_POSTURE, np.zeros(2))
        with_force = forward_dynamics(arm, rest, np.zeros(2), force)
        as_torque = forward_dynamics(arm, rest, J.T @ force)
        np.testing.assert_allclose(with_force, as_torque, atol=1e-12)

    def test_hand_stiffness_is_symmetric(self, arm):
        from fieldgen.core.arm import HOME_POSTURE, hand_inertia, hand_stiffness
        from fieldgen.core.controllers import K_NOMINAL

        K = hand_stiffness(arm, HOME_POSTURE, K_NOMINAL)
        np.testing.assert_allclose(K, K.T, atol=1e-9)
        assert np.all(np.linalg.eigvalsh(K) > 0)
        assert np.all(np.linalg.eigvalsh(hand_inertia(arm, HOME_POSTURE)) > 0)

    def test_batches_match_single_states(self, arm):
        from fieldgen.core.arm import JointState, forward_dynamics, hand_inertia, hand_stiffness
        from fieldgen.core.controllers import K_NOMINAL

        rng = np.random.default_rng(5)
        q = np.column_stack([rng.uniform(0.2, 1.2, 12), rng.uniform(0.6, 2.2, 12)])
        qd = rng.normal(0.0, 2.0, (12, 2))
        tau = rng.normal(0.0, 1.0, (12, 2))
        force = rng.normal(0.0, 5.0, (12, 2))
        batch = forward_dynamics(arm, JointState(q, qd), tau, force)
        stiffness = hand_stiffness(arm, q, K_NOMINAL)
        inertia = hand_inertia(arm, q)
        assert batch.shape == (12, 2) and stiffness.shape == inertia.shape == (12, 2, 2)
        for i in range(12):
            np.testing.assert_allclose(batch[i], forward_dynamics(arm, JointState(q[i], qd[i]), tau[i], force[i]), atol=1e-12)
            np.testing.assert_allclose(stiffness[i], hand_stiffness(arm, q[i], K_NOMINAL), atol=1e-9)
            np.testing.assert_allclose(inertia[i], hand_inertia(arm, q[i]), atol=1e-12)
