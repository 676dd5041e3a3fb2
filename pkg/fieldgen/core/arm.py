"""Planar two-link arm: kinematics and rigid-body dynamics.

Angles are in radians. ``q1`` is measured counter-clockwise from the +x axis,
``q2`` is elbow flexion relative to the upper arm. All functions accept a
single state (arrays of shape ``(2,)``) or a batch (shape ``(N, 2)``); matrices
come back with shape ``(2, 2)`` or ``(N, 2, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import UnreachableTargetError

# Upper arm / forearm averages used for simulated subjects.
DEFAULT_M1 = 1.93
DEFAULT_M2 = 1.52
DEFAULT_L1 = 0.33
DEFAULT_L2 = 0.34
DEFAULT_R1 = 0.165
DEFAULT_R2 = 0.19

HOME_POSTURE = np.radians([45.0, 90.0])


def _mat(a, b, c, d) -> np.ndarray:
    """Stack four scalars (or equal-length arrays) into 2x2 matrices."""
    return np.stack([np.stack([a, b], axis=-1), np.stack([c, d], axis=-1)], axis=-2)


def solve_base(l1: float, l2: float, home: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    """Shoulder position that puts the hand at ``home`` in the home posture."""
    q1, q2 = HOME_POSTURE
    reach = np.array(
        [l1 * np.cos(q1) + l2 * np.cos(q1 + q2), l1 * np.sin(q1) + l2 * np.sin(q1 + q2)]
    )
    return np.asarray(home, dtype=float) - reach


@dataclass(frozen=True)
class ArmParams:
    """Physical description of the arm.

    Link inertias default to uniform rods (m l^2 / 12) and the shoulder is
    placed so the home posture reaches the origin.
    """

    m1: float = DEFAULT_M1
    m2: float = DEFAULT_M2
    l1: float = DEFAULT_L1
    l2: float = DEFAULT_L2
    r1: float = DEFAULT_R1
    r2: float = DEFAULT_R2
    i1: float | None = None
    i2: float | None = None
    base: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.i1 is None:
            object.__setattr__(self, "i1", self.m1 * self.l1**2 / 12.0)
        if self.i2 is None:
            object.__setattr__(self, "i2", self.m2 * self.l2**2 / 12.0)
        if self.base is None:
            object.__setattr__(self, "base", solve_base(self.l1, self.l2))
        else:
            object.__setattr__(self, "base", np.asarray(self.base, dtype=float))

        positive = ("m1", "m2", "l1", "l2", "r1", "r2", "i1", "i2")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"ArmParams.{name} must be strictly positive")
        if self.r1 > self.l1 or self.r2 > self.l2:
            raise ValueError("centre-of-mass distance exceeds link length")

    @classmethod
    def with_home(cls, home: tuple[float, float], **kwargs) -> "ArmParams":
        """Build parameters whose home posture places the hand at ``home``."""
        l1 = kwargs.get("l1", DEFAULT_L1)
        l2 = kwargs.get("l2", DEFAULT_L2)
        return cls(base=solve_base(l1, l2, home), **kwargs)


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray | None = None


@dataclass(frozen=True)
class HandState:
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray | None = None


# =============================================================================
# Kinematics
# =============================================================================


def forward_kinematics(params: ArmParams, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    q1, q12 = q[..., 0], q[..., 0] + q[..., 1]
    x = params.l1 * np.cos(q1) + params.l2 * np.cos(q12)
    y = params.l1 * np.sin(q1) + params.l2 * np.sin(q12)
    return np.stack([x, y], axis=-1) + params.base


def jacobian(params: ArmParams, q) -> np.ndarray:
    """End-point Jacobian dp/dq (m/rad)."""
    q = np.asarray(q, dtype=float)
    q1, q12 = q[..., 0], q[..., 0] + q[..., 1]
    s1, c1 = np.sin(q1), np.cos(q1)
    s12, c12 = np.sin(q12), np.cos(q12)
    l1, l2 = params.l1, params.l2
    return _mat(-l1 * s1 - l2 * s12, -l2 * s12, l1 * c1 + l2 * c12, l2 * c12)


def jacobian_dot(params: ArmParams, q, qd) -> np.ndarray:
    """Time derivative of the Jacobian along (q, qd)."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    q1, q12 = q[..., 0], q[..., 0] + q[..., 1]
    w1, w12 = qd[..., 0], qd[..., 0] + qd[..., 1]
    s1, c1 = np.sin(q1), np.cos(q1)
    s12, c12 = np.sin(q12), np.cos(q12)
    l1, l2 = params.l1, params.l2
    return _mat(
        -l1 * c1 * w1 - l2 * c12 * w12,
        -l2 * c12 * w12,
        -l1 * s1 * w1 - l2 * s12 * w12,
        -l2 * s12 * w12,
    )


def inverse_kinematics(params: ArmParams, p) -> np.ndarray:
    """Joint angles for hand position ``p`` on the elbow-flexed branch.

    Raises:
        UnreachableTargetError: |p - base| outside (|l1 - l2|, l1 + l2)
    """
    p = np.asarray(p, dtype=float)
    delta = p - params.base
    dx, dy = delta[..., 0], delta[..., 1]
    r2 = dx**2 + dy**2
    r = np.sqrt(r2)
    l1, l2 = params.l1, params.l2
    if np.any(r >= l1 + l2) or np.any(r <= abs(l1 - l2)):
        worst = float(np.max(r)) if np.any(r >= l1 + l2) else float(np.min(r))
        raise UnreachableTargetError(
            f"hand position at distance {worst:.4f} m from the shoulder is outside "
            f"the reachable annulus ({abs(l1 - l2):.4f}, {l1 + l2:.4f}) m"
        )
    cos_q2 = np.clip((r2 - l1**2 - l2**2) / (2.0 * l1 * l2), -1.0, 1.0)
    q2 = np.arccos(cos_q2)
    q1 = np.arctan2(dy, dx) - np.arctan2(l2 * np.sin(q2), l1 + l2 * np.cos(q2))
    return np.stack([q1, q2], axis=-1)


def hand_state(params: ArmParams, state: JointState) -> HandState:
    J = jacobian(params, state.q)
    v = np.einsum("...ij,...j->...i", J, state.qd)
    a = None
    if state.qdd is not None:
        a = np.einsum("...ij,...j->...i", J, state.qdd) + np.einsum(
            "...ij,...j->...i", jacobian_dot(params, state.q, state.qd), state.qd
        )
    return HandState(p=forward_kinematics(params, state.q), v=v, a=a)


def joint_state(params: ArmParams, hand: HandState) -> JointState:
    """Joint-space image of a hand state via IK and the Jacobian chain rule."""
    q = inverse_kinematics(params, hand.p)
    J = jacobian(params, q)
    qd = np.linalg.solve(J, hand.v[..., None])[..., 0]
    qdd = None
    if hand.a is not None:
        rhs = hand.a - np.einsum("...ij,...j->...i", jacobian_dot(params, q, qd), qd)
        qdd = np.linalg.solve(J, rhs[..., None])[..., 0]
    return JointState(q=q, qd=qd, qdd=qdd)


# =============================================================================
# Dynamics
# =============================================================================


def inertia_matrix(params: ArmParams, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    c2 = np.cos(q[..., 1])
    m1, m2, l1, r1, r2 = params.m1, params.m2, params.l1, params.r1, params.r2
    i1, i2 = params.i1, params.i2
    i22 = i2 + m2 * r2**2
    i12 = i22 + m2 * l1 * r2 * c2
    i11 = i1 + i2 + m1 * r1**2 + m2 * (l1**2 + r2**2 + 2.0 * l1 * r2 * c2)
    return _mat(i11, i12, i12, i22 * np.ones_like(c2))


def inertia_matrix_dot(params: ArmParams, q, qd) -> np.ndarray:
    """dI/dt along (q, qd); only the elbow angle enters."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    g = -params.m2 * params.l1 * params.r2 * np.sin(q[..., 1]) * qd[..., 1]
    return _mat(2.0 * g, g, g, np.zeros_like(g))


def coriolis_matrix(params: ArmParams, q, qd) -> np.ndarray:
    """Christoffel-symbol Coriolis/centripetal matrix (dI/dt - 2C is skew)."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    h = params.m2 * params.l1 * params.r2 * np.sin(q[..., 1])
    w1, w2 = qd[..., 0], qd[..., 1]
    return _mat(-h * w2, -h * (w1 + w2), h * w1, np.zeros_like(h))


def forward_dynamics(params: ArmParams, state: JointState, tau, f_exp=None) -> np.ndarray:
    """Joint accelerations from I(q) qdd + C(q, qd) qd = tau + J^T F_exp."""
    q = np.asarray(state.q, dtype=float)
    qd = np.asarray(state.qd, dtype=float)
    rhs = np.asarray(tau, dtype=float) - np.einsum("...ij,...j->...i", coriolis_matrix(params, q, qd), qd)
    if f_exp is not None:
        rhs = rhs + np.einsum("...ji,...j->...i", jacobian(params, q), np.asarray(f_exp, dtype=float))
    return np.linalg.solve(inertia_matrix(params, q), rhs[..., None])[..., 0]


def _congruence(J: np.ndarray, M: np.ndarray) -> np.ndarray:
    """J^-T M J^-1 for one matrix or a stack."""
    J_inv = np.linalg.inv(J)
    return np.swapaxes(J_inv, -1, -2) @ M @ J_inv


def hand_inertia(params: ArmParams, q) -> np.ndarray:
    """Cartesian inertia J^-T I J^-1 (kg) seen at the hand."""
    return _congruence(jacobian(params, q), inertia_matrix(params, q))


def hand_stiffness(params: ArmParams, q, K) -> np.ndarray:
    """Cartesian stiffness J^-T K J^-1 (N/m) for joint stiffness ``K``."""
    return _congruence(jacobian(params, q), np.asarray(K, dtype=float))
