"""Desired trajectories, learned field representations and torque policies."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Protocol

import numpy as np

from .arm import (
    ArmParams,
    HandState,
    coriolis_matrix,
    forward_kinematics,
    inertia_matrix,
    jacobian,
    joint_state,
)
from .environment import curl_force
from .exceptions import MissingBaselineError

DEFAULT_MOVEMENT_TIME = 0.375  # s
DEFAULT_REACH = 0.10  # m

K_NOMINAL = np.array([[32.0, 16.0], [16.0, 21.0]])  # N m/rad
B_NOMINAL = np.array([[5.0, 3.0], [3.0, 4.0]])  # N m s/rad

# Gains fitted to pre- and post-adaptation baselines.
BASELINE_SCALING = (0.7278, 0.0723)
POST_ADAPTATION_SCALING = (0.1406, 0.7108)


class ModelKind(str, Enum):
    STANDARD = "standard"
    IMPEDANCE = "impedance"


def wrap_deg(angle):
    """Wrap angles to (-180, 180]."""
    wrapped = -((-np.asarray(angle, dtype=float) + 180.0) % 360.0 - 180.0)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def direction_vector(direction_deg: float) -> np.ndarray:
    rad = np.radians(direction_deg)
    return np.array([np.cos(rad), np.sin(rad)])


@dataclass(frozen=True)
class RepresentationParams:
    """Gaussian tuning of the learned field gain around the training direction.

    ``amplitude`` is a fraction of the true gain, ``sigma`` and ``mu`` are in
    degrees. The impedance model uses a centered Gaussian (``mu`` is None).
    """

    model: ModelKind
    amplitude: float
    sigma: float
    theta_train: float
    mu: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", ModelKind(self.model))
        if not self.sigma > 0:
            raise ValueError("representation width must be positive")
        if self.model is ModelKind.STANDARD and self.mu is None:
            object.__setattr__(self, "mu", 0.0)
        if self.model is ModelKind.IMPEDANCE and self.mu is not None:
            raise ValueError("the impedance model's representation has no offset")

    def fraction(self, theta):
        """alpha_hat / alpha_true at reach direction ``theta``."""
        delta = wrap_deg(np.asarray(theta, dtype=float) - self.theta_train - (self.mu or 0.0))
        return self.amplitude * np.exp(-np.square(delta) / (2.0 * self.sigma**2))


def representation_strength(rep: RepresentationParams, theta, alpha_true: float = 1.0):
    return alpha_true * rep.fraction(theta)


@dataclass(frozen=True)
class ImpedanceScaling:
    alpha_k: float = BASELINE_SCALING[0]
    alpha_b: float = BASELINE_SCALING[1]

    def __post_init__(self) -> None:
        if self.alpha_k < 0 or self.alpha_b < 0:
            raise ValueError("impedance scalings must be non-negative")

    @property
    def stiffness(self) -> np.ndarray:
        return self.alpha_k * K_NOMINAL

    @property
    def damping(self) -> np.ndarray:
        return self.alpha_b * B_NOMINAL


# =============================================================================
# Desired trajectories
# =============================================================================


def min_jerk_profile(T: float, t):
    """Normalized quintic progress s(t) and its first two derivatives."""
    if T <= 0:
        raise ValueError("movement time must be positive")
    tau = np.clip(np.asarray(t, dtype=float) / T, 0.0, 1.0)
    s = 10 * tau**3 - 15 * tau**4 + 6 * tau**5
    sd = (30 * tau**2 - 60 * tau**3 + 30 * tau**4) / T
    sdd = (60 * tau - 180 * tau**2 + 120 * tau**3) / T**2
    return s, sd, sdd


def min_jerk(start, goal, T: float, t):
    """Straight-line minimum-jerk position, velocity and acceleration at ``t``."""
    start = np.asarray(start, dtype=float)
    delta = np.asarray(goal, dtype=float) - start
    s, sd, sdd = min_jerk_profile(T, t)
    s, sd, sdd = (np.asarray(x)[..., None] for x in (s, sd, sdd))
    return start + s * delta, sd * delta, sdd * delta


@dataclass(frozen=True, eq=False)
class DesiredTrajectory:
    """Sampled desired hand path with its joint-space image."""

    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray

    @classmethod
    def from_hand(cls, params: ArmParams, t, p, v, a) -> "DesiredTrajectory":
        joints = joint_state(params, HandState(p=np.asarray(p), v=np.asarray(v), a=np.asarray(a)))
        return cls(
            t=np.asarray(t, dtype=float),
            p=np.asarray(p, dtype=float),
            v=np.asarray(v, dtype=float),
            a=np.asarray(a, dtype=float),
            q=joints.q,
            qd=joints.qd,
            qdd=joints.qdd,
        )

    @property
    def start(self) -> np.ndarray:
        return self.p[0]

    def resample(self, params: ArmParams, times) -> "DesiredTrajectory":
        """Linear interpolation onto ``times``; the final posture is held afterwards."""
        times = np.asarray(times, dtype=float)
        after = times > self.t[-1]

        def interp(series: np.ndarray, hold: bool) -> np.ndarray:
            out = np.column_stack([np.interp(times, self.t, series[:, i]) for i in range(2)])
            if not hold:
                out[after] = 0.0
            return out

        return DesiredTrajectory.from_hand(
            params, times, interp(self.p, True), interp(self.v, False), interp(self.a, False)
        )

    def consistency_error(self, params: ArmParams) -> float:
        """Largest gap between the hand path and FK of the joint path (m)."""
        return float(np.max(np.abs(forward_kinematics(params, self.q) - self.p)))


def straight_plan(params: ArmParams, start, goal, T: float, times) -> DesiredTrajectory:
    p, v, a = min_jerk(start, goal, T, times)
    return DesiredTrajectory.from_hand(params, times, p, v, a)


def curved_plan(
    params: ArmParams, start, goal, T: float, peak_error: float, times
) -> DesiredTrajectory:
    """Minimum-jerk reach with a lateral half-sine bump of ``peak_error`` metres.

    Positive ``peak_error`` bends the path counter-clockwise (left of travel).
    """
    start = np.asarray(start, dtype=float)
    delta = np.asarray(goal, dtype=float) - start
    u = delta / np.linalg.norm(delta)
    n = np.array([-u[1], u[0]])
    s, sd, sdd = min_jerk_profile(T, times)
    bump = peak_error * np.sin(np.pi * s)
    bump_d = peak_error * np.pi * np.cos(np.pi * s) * sd
    bump_dd = peak_error * np.pi * (np.cos(np.pi * s) * sdd - np.pi * np.sin(np.pi * s) * sd**2)
    p = start + s[:, None] * delta + bump[:, None] * n
    v = sd[:, None] * delta + bump_d[:, None] * n
    a = sdd[:, None] * delta + bump_dd[:, None] * n
    return DesiredTrajectory.from_hand(params, times, p, v, a)


def channel_plan(params: ArmParams, des: DesiredTrajectory, origin, direction: float) -> DesiredTrajectory:
    """Component of ``des`` along the channel from ``origin`` toward ``direction``."""
    origin = np.asarray(origin, dtype=float)
    u = direction_vector(direction)

    def along(x: np.ndarray) -> np.ndarray:
        return (x @ u)[:, None] * u

    return DesiredTrajectory.from_hand(params, des.t, origin + along(des.p - origin), along(des.v), along(des.a))


@dataclass(frozen=True, eq=False)
class DesiredSample:
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray


def sample_at(des: DesiredTrajectory, index: int) -> DesiredSample:
    return DesiredSample(q=des.q[index], qd=des.qd[index], qdd=des.qdd[index])


# =============================================================================
# Torques
# =============================================================================


def feedforward_torque(params: ArmParams, des: DesiredSample, q, qd, alpha_hat: float):
    """Inverse dynamics of the plan plus compensation of the estimated curl field."""
    tau = inertia_matrix(params, q) @ des.qdd + coriolis_matrix(params, q, qd) @ des.qd
    if alpha_hat != 0.0:
        J = jacobian(params, q)
        tau = tau - J.T @ curl_force(alpha_hat, J @ qd)
    return tau


def feedback_torque(q, qd, des: DesiredSample, scaling: ImpedanceScaling) -> np.ndarray:
    """Restoring impedance torque -(K (q - q_des) + B (qd - qd_des))."""
    return -(
        scaling.stiffness @ (np.asarray(q) - des.q)
        + scaling.damping @ (np.asarray(qd) - des.qd)
    )


class TorquePolicy(Protocol):
    desired: DesiredTrajectory

    def torque(self, index: int, q, qd) -> np.ndarray:
        """Joint torque at desired-trajectory sample ``index``."""
        ...


@dataclass(frozen=True, eq=False)
class StandardController:
    params: ArmParams
    desired: DesiredTrajectory
    alpha_hat: float

    def torque(self, index: int, q, qd) -> np.ndarray:
        return feedforward_torque(self.params, sample_at(self.desired, index), q, qd, self.alpha_hat)


@dataclass(frozen=True, eq=False)
class ImpedanceController:
    """Feed-forward along ``feedforward`` (``desired`` when unset), impedance toward ``desired``."""

    params: ArmParams
    desired: DesiredTrajectory
    alpha_hat: float
    scaling: ImpedanceScaling
    feedforward: DesiredTrajectory | None = None

    def torque(self, index: int, q, qd) -> np.ndarray:
        des = sample_at(self.desired, index)
        ff = des if self.feedforward is None else sample_at(self.feedforward, index)
        return feedforward_torque(self.params, ff, q, qd, self.alpha_hat) + feedback_torque(
            q, qd, des, self.scaling
        )


def _alpha_hat(rep: RepresentationParams | None, direction: float, alpha_true: float) -> float:
    if rep is None:
        return 0.0
    return float(representation_strength(rep, direction, alpha_true))


def standard_controller(
    params: ArmParams,
    rep: RepresentationParams | None,
    direction: float,
    alpha_true: float,
    start,
    goal,
    times,
    movement_time: float = DEFAULT_MOVEMENT_TIME,
) -> StandardController:
    if rep is not None and rep.model is not ModelKind.STANDARD:
        raise ValueError("standard controller needs a standard-model representation")
    desired = straight_plan(params, start, goal, movement_time, times)
    return StandardController(params, desired, _alpha_hat(rep, direction, alpha_true))


# =============================================================================
# Baseline movements
# =============================================================================


class BaselineSet(Protocol):
    def plan_for(self, params: ArmParams, direction: float, times) -> DesiredTrajectory:
        """Desired trajectory for ``direction`` sampled on ``times``."""
        ...


def _direction_key(direction: float) -> int:
    return int(round(direction)) % 360


@dataclass(frozen=True, eq=False)
class CurvedBaselines:
    """Synthetic baseline movements: minimum-jerk reaches bent by a signed peak error.

    ``peak_errors_mm`` maps each direction (deg) to its lateral peak error;
    positive values curve the path counter-clockwise.
    """

    home: tuple[float, float] = (0.0, 0.0)
    reach: float = DEFAULT_REACH
    movement_time: float = DEFAULT_MOVEMENT_TIME
    peak_errors_mm: Mapping[int, float] = field(default_factory=dict)

    def plan_for(self, params: ArmParams, direction: float, times) -> DesiredTrajectory:
        key = _direction_key(direction)
        if key not in self.peak_errors_mm:
            raise MissingBaselineError(f"no baseline trajectory for direction {key} deg")
        goal = np.asarray(self.home) + self.reach * direction_vector(direction)
        return curved_plan(
            params,
            self.home,
            goal,
            self.movement_time,
            self.peak_errors_mm[key] * 1e-3,
            np.asarray(times, dtype=float),
        )


@dataclass(frozen=True, eq=False)
class SampledBaselines:
    """Baseline movements measured or imported as sampled hand paths."""

    trajectories: Mapping[int, DesiredTrajectory]

    def plan_for(self, params: ArmParams, direction: float, times) -> DesiredTrajectory:
        key = _direction_key(direction)
        if key not in self.trajectories:
            raise MissingBaselineError(f"no baseline trajectory for direction {key} deg")
        return self.trajectories[key].resample(params, times)


def impedance_controller(
    params: ArmParams,
    rep: RepresentationParams | None,
    scaling: ImpedanceScaling,
    baselines: BaselineSet,
    direction: float,
    alpha_true: float,
    times,
    channel_origin=None,
) -> ImpedanceController:
    """Impedance policy around the baseline movement for ``direction``.

    With ``channel_origin`` set the hand is held on a channel from that point:
    the feed-forward drives the along-channel part of the baseline while
    stiffness and damping still pull toward the full (curved) baseline.

    Raises:
        MissingBaselineError: no baseline trajectory for the direction
    """
    if rep is not None and rep.model is not ModelKind.IMPEDANCE:
        raise ValueError("impedance controller needs an impedance-model representation")
    desired = baselines.plan_for(params, direction, times)
    feedforward = None
    if channel_origin is not None:
        feedforward = channel_plan(params, desired, channel_origin, direction)
    return ImpedanceController(
        params, desired, _alpha_hat(rep, direction, alpha_true), scaling, feedforward
    )
