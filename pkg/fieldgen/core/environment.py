"""Forces rendered at the hand: null field, curl field and error-clamp channel."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .arm import (
    ArmParams,
    coriolis_matrix,
    forward_kinematics,
    inertia_matrix,
    jacobian,
    jacobian_dot,
)

DEFAULT_ALPHA = 15.0  # N s/m
DEFAULT_HALF_WIDTH = 0.0005  # m
DEFAULT_K_WALL = 5000.0  # N/m
DEFAULT_B_WALL = 5.0  # N s/m

# Force-loop gains of the manipulandum.
ROBOT_GAIN_NULL = 0.5
ROBOT_GAIN_CURL = 0.75

# Baumgarte stabilisation of the rigid channel (rad/s).
CONSTRAINT_OMEGA = 200.0


class FieldKind(str, Enum):
    NULL = "null"
    CURL = "curl"
    CLAMP = "clamp"


class ChannelMode(str, Enum):
    RIGID = "rigid"
    SPRING = "spring"


@dataclass(frozen=True)
class ChannelGeometry:
    """Straight corridor from ``origin`` to ``target``.

    ``mode`` selects the rendering: ``rigid`` holds the hand exactly on the
    line with a constraint force, ``spring`` uses spring-damper walls with
    ``half_width`` of free play on either side.
    """

    origin: tuple[float, float]
    target: tuple[float, float]
    half_width: float = DEFAULT_HALF_WIDTH
    k_wall: float = DEFAULT_K_WALL
    b_wall: float = DEFAULT_B_WALL
    mode: ChannelMode = ChannelMode.RIGID

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", tuple(float(c) for c in self.origin))
        object.__setattr__(self, "target", tuple(float(c) for c in self.target))
        object.__setattr__(self, "mode", ChannelMode(self.mode))
        if not self.half_width > 0:
            raise ValueError("channel half_width must be positive")
        if self.k_wall < 0 or self.b_wall < 0:
            raise ValueError("channel wall stiffness and damping must be non-negative")
        if self.origin == self.target:
            raise ValueError("channel origin and target coincide")

    @property
    def axis(self) -> np.ndarray:
        d = np.subtract(self.target, self.origin)
        return d / np.linalg.norm(d)

    @property
    def normal(self) -> np.ndarray:
        """Axis rotated 90 degrees counter-clockwise (left of travel)."""
        ux, uy = self.axis
        return np.array([-uy, ux])

    def lateral(self, p) -> float:
        return float(self.normal @ (np.asarray(p, dtype=float) - self.origin))

    def lateral_rate(self, v) -> float:
        return float(self.normal @ np.asarray(v, dtype=float))


@dataclass(frozen=True)
class FieldSpec:
    """What the robot renders in one trial.

    ``loop_gain`` enables the manipulandum's force loop (see
    ``robot_rendered_force``); ``None`` applies the desired force directly.
    """

    kind: FieldKind = FieldKind.NULL
    alpha: float = DEFAULT_ALPHA
    channel: ChannelGeometry | None = None
    loop_gain: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FieldKind(self.kind))
        if not np.isfinite(self.alpha):
            raise ValueError("field gain must be finite")
        if self.kind is FieldKind.CLAMP and self.channel is None:
            raise ValueError("a clamp field needs a channel")
        if self.loop_gain is not None and not 0.0 <= self.loop_gain < 1.0:
            raise ValueError("force-loop gain must lie in [0, 1)")

    @classmethod
    def null(cls) -> "FieldSpec":
        return cls(kind=FieldKind.NULL)

    @classmethod
    def curl(cls, alpha: float = DEFAULT_ALPHA) -> "FieldSpec":
        return cls(kind=FieldKind.CURL, alpha=alpha)

    @classmethod
    def clamp(cls, channel: ChannelGeometry, alpha: float = DEFAULT_ALPHA) -> "FieldSpec":
        return cls(kind=FieldKind.CLAMP, alpha=alpha, channel=channel)

    @property
    def is_rigid_clamp(self) -> bool:
        return (
            self.kind is FieldKind.CLAMP
            and self.channel is not None
            and self.channel.mode is ChannelMode.RIGID
        )

    def force(self, p, v) -> np.ndarray:
        """Environment force on the hand, excluding any rigid-channel constraint."""
        if self.kind is FieldKind.CURL:
            return curl_force(self.alpha, v)
        if self.kind is FieldKind.CLAMP and not self.is_rigid_clamp:
            assert self.channel is not None
            return channel_force(self.channel, p, v)
        return np.zeros(2)


def curl_force(alpha: float, v) -> np.ndarray:
    """F = alpha * (v_y, -v_x)."""
    v = np.asarray(v, dtype=float)
    return alpha * np.stack([v[..., 1], -v[..., 0]], axis=-1)


def channel_force(geom: ChannelGeometry, p, v) -> np.ndarray:
    """Spring-damper wall force; zero inside the free play, never pulls outward."""
    d = geom.lateral(p)
    excess = abs(d) - geom.half_width
    if excess <= 0.0:
        return np.zeros(2)
    vd = geom.lateral_rate(v)
    f_lat = -geom.k_wall * excess * np.sign(d) - geom.b_wall * vd
    # walls only push inward
    f_lat = min(f_lat, 0.0) if d > 0 else max(f_lat, 0.0)
    return f_lat * geom.normal


def channel_constraint_force(
    geom: ChannelGeometry,
    params: ArmParams,
    q,
    qd,
    tau,
    f_other=None,
    omega: float = CONSTRAINT_OMEGA,
) -> np.ndarray:
    """Lateral force that keeps the hand on the channel line.

    Solves for the multiplier that makes the lateral acceleration follow
    -2 omega d' - omega^2 d, so the constraint is exact up to integration error
    and any drift decays critically damped.
    """
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    n = geom.normal
    J = jacobian(params, q)
    I = inertia_matrix(params, q)
    rhs = np.asarray(tau, dtype=float) - coriolis_matrix(params, q, qd) @ qd
    if f_other is not None:
        rhs = rhs + J.T @ np.asarray(f_other, dtype=float)
    qdd_free = np.linalg.solve(I, rhs)
    v = J @ qd
    p_rel = forward_kinematics(params, q) - np.asarray(geom.origin)
    a_free = J @ qdd_free + jacobian_dot(params, q, qd) @ qd
    d, vd = float(n @ p_rel), float(n @ v)
    target_acc = -2.0 * omega * vd - omega**2 * d
    Jn = J.T @ n
    mobility = float(Jn @ np.linalg.solve(I, Jn))
    lam = (target_acc - float(n @ a_free)) / mobility
    return lam * n


def robot_rendered_force(f_desired, f_measured, gain: float) -> np.ndarray:
    """Low-gain force loop: F_robot = F_desired + K (F_desired - F_measured)."""
    if gain < 0:
        raise ValueError("force-loop gain must be non-negative")
    f_desired = np.asarray(f_desired, dtype=float)
    return f_desired + gain * (f_desired - np.asarray(f_measured, dtype=float))


def robot_gain(kind: FieldKind) -> float:
    return ROBOT_GAIN_CURL if FieldKind(kind) is FieldKind.CURL else ROBOT_GAIN_NULL
