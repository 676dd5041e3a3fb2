"""Closed-loop simulation of single reaches."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .arm import (
    ArmParams,
    JointState,
    forward_dynamics,
    forward_kinematics,
    hand_inertia,
    hand_stiffness,
    inverse_kinematics,
    jacobian,
)
from .controllers import (
    DEFAULT_MOVEMENT_TIME,
    DEFAULT_REACH,
    BaselineSet,
    CurvedBaselines,
    ImpedanceScaling,
    ModelKind,
    RepresentationParams,
    TorquePolicy,
    direction_vector,
    impedance_controller,
    standard_controller,
)
from .environment import (
    DEFAULT_ALPHA,
    DEFAULT_B_WALL,
    DEFAULT_HALF_WIDTH,
    DEFAULT_K_WALL,
    ChannelGeometry,
    ChannelMode,
    FieldKind,
    FieldSpec,
    channel_constraint_force,
    robot_gain,
    robot_rendered_force,
)
from .exceptions import IntegrationDivergenceError
from .protocol import DIRECTIONS, Phase, Protocol, TrialKind

logger = logging.getLogger("fieldgen")

DEFAULT_STEP = 5e-4  # s
DEFAULT_LOG_RATE = 1000.0  # Hz
DEFAULT_SETTLE_TIME = 0.125  # s
DIVERGENCE_LIMIT = 50.0  # rad/s


# =============================================================================
# Integration
# =============================================================================


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, x: np.ndarray, h: float):
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_fixed_step(
    f: Callable[[float, np.ndarray], np.ndarray],
    x0,
    n_steps: int,
    step: float,
    stride: int = 1,
    check: Callable[[float, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Explicit RK4 from t = 0; returns every ``stride``-th state (first and last included)."""
    x = np.asarray(x0, dtype=float).copy()
    times = [0.0]
    states = [x.copy()]
    for k in range(1, n_steps + 1):
        x = rk4_step(f, (k - 1) * step, x, step)
        if check is not None:
            check(k * step, x)
        if k % stride == 0 or k == n_steps:
            times.append(k * step)
            states.append(x.copy())
    return np.asarray(times), np.asarray(states)


# =============================================================================
# Trial specification and record
# =============================================================================


@dataclass(frozen=True, eq=False)
class ControllerSpec:
    """Which policy drives the arm and what it has learned.

    ``alpha_true`` is the gain of the trained field, so the representation's
    estimate is ``fraction(direction) * alpha_true`` in every trial type.
    """

    model: ModelKind = ModelKind.STANDARD
    representation: RepresentationParams | None = None
    scaling: ImpedanceScaling = field(default_factory=ImpedanceScaling)
    alpha_true: float = DEFAULT_ALPHA
    baselines: BaselineSet | None = None


@dataclass(frozen=True, eq=False)
class TrialSpec:
    direction: float
    field: FieldSpec
    controller: ControllerSpec
    kind: TrialKind
    index: int = 0
    block: int = 0
    group: int | None = None
    feedback: bool = False
    arm: ArmParams = field(default_factory=ArmParams)
    home: tuple[float, float] = (0.0, 0.0)
    reach: float = DEFAULT_REACH
    movement_time: float = DEFAULT_MOVEMENT_TIME
    duration: float = DEFAULT_MOVEMENT_TIME + DEFAULT_SETTLE_TIME
    step: float = DEFAULT_STEP
    log_rate: float = DEFAULT_LOG_RATE
    divergence_limit: float = DIVERGENCE_LIMIT

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", TrialKind(self.kind))
        if self.duration < self.movement_time:
            raise ValueError("trial duration is shorter than the movement time")
        if self.log_rate * self.step > 1.0 + 1e-12:
            raise ValueError("log rate exceeds the integration rate")
        stride = 1.0 / (self.log_rate * self.step)
        if abs(stride - round(stride)) > 1e-9:
            raise ValueError("log interval must be a whole number of integration steps")

    @property
    def target(self) -> np.ndarray:
        return np.asarray(self.home) + self.reach * direction_vector(self.direction)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.step))

    @property
    def stride(self) -> int:
        return int(round(1.0 / (self.log_rate * self.step)))


@dataclass(frozen=True)
class TrialCondition:
    """Echo of the TrialSpec carried with every record."""

    index: int
    block: int
    group: int | None
    direction: float
    kind: str
    feedback: bool
    field: str
    alpha: float
    model: str
    home: tuple[float, float]
    target: tuple[float, float]
    channel_mode: str | None
    half_width: float | None
    k_wall: float | None
    b_wall: float | None
    step: float
    log_rate: float
    duration: float

    @property
    def trial_kind(self) -> TrialKind:
        return TrialKind(self.kind)

    @property
    def phase(self) -> Phase:
        return self.trial_kind.phase

    @property
    def is_clamp(self) -> bool:
        return self.trial_kind.is_clamp

    @classmethod
    def from_spec(cls, spec: TrialSpec) -> "TrialCondition":
        channel = spec.field.channel
        return cls(
            index=spec.index,
            block=spec.block,
            group=spec.group,
            direction=float(spec.direction),
            kind=spec.kind.value,
            feedback=spec.feedback,
            field=spec.field.kind.value,
            alpha=spec.field.alpha,
            model=spec.controller.model.value,
            home=(float(spec.home[0]), float(spec.home[1])),
            target=(float(spec.target[0]), float(spec.target[1])),
            channel_mode=channel.mode.value if channel else None,
            half_width=channel.half_width if channel else None,
            k_wall=channel.k_wall if channel else None,
            b_wall=channel.b_wall if channel else None,
            step=spec.step,
            log_rate=spec.log_rate,
            duration=spec.duration,
        )


@dataclass(frozen=True, eq=False)
class TrialRecord:
    """Logged time series of one reach.

    ``f`` is the force the hand applies to the environment (the negative of
    the environment's force on the hand).
    """

    t: np.ndarray
    p: np.ndarray
    v: np.ndarray
    f: np.ndarray
    q: np.ndarray
    condition: TrialCondition

    def __len__(self) -> int:
        return len(self.t)

    @property
    def rate(self) -> float:
        return self.condition.log_rate


# =============================================================================
# Simulation
# =============================================================================


def _policy(spec: TrialSpec, times: np.ndarray) -> TorquePolicy:
    ctrl = spec.controller
    if ctrl.model is ModelKind.IMPEDANCE:
        baselines = ctrl.baselines
        if baselines is None:
            baselines = CurvedBaselines(
                home=spec.home,
                reach=spec.reach,
                movement_time=spec.movement_time,
                peak_errors_mm={int(round(spec.direction)) % 360: 0.0},
            )
        return impedance_controller(
            spec.arm,
            ctrl.representation,
            ctrl.scaling,
            baselines,
            spec.direction,
            ctrl.alpha_true,
            times,
            channel_origin=spec.home if spec.field.kind is FieldKind.CLAMP else None,
        )
    return standard_controller(
        spec.arm,
        ctrl.representation,
        spec.direction,
        ctrl.alpha_true,
        spec.home,
        spec.target,
        times,
        spec.movement_time,
    )


class _ClosedLoop:
    """Arm + policy + environment as a first-order system in (q, qd)."""

    def __init__(self, spec: TrialSpec):
        self.spec = spec
        self.half = spec.step / 2.0
        self.times = np.arange(2 * spec.n_steps + 1) * self.half
        self.policy = _policy(spec, self.times)
        # force-loop transducer reading held over each step, one entry per step start
        self.measured = [np.zeros(2)]

    def _index(self, t: float) -> int:
        return min(int(round(t / self.half)), len(self.times) - 1)

    def hand_force(
        self, t: float, x: np.ndarray, measured: np.ndarray | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Joint torque and environment force on the hand at state ``x``."""
        spec = self.spec
        q, qd = x[:2], x[2:]
        tau = self.policy.torque(self._index(t), q, qd)
        if spec.field.is_rigid_clamp:
            assert spec.field.channel is not None
            force = channel_constraint_force(spec.field.channel, spec.arm, q, qd, tau)
        elif spec.field.kind is FieldKind.NULL:
            force = np.zeros(2)
        else:
            force = spec.field.force(forward_kinematics(spec.arm, q), jacobian(spec.arm, q) @ qd)
            if spec.field.loop_gain is not None:
                held = self.measured[-1] if measured is None else measured
                force = robot_rendered_force(force, held, spec.field.loop_gain)
        return tau, force

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        tau, force = self.hand_force(t, x)
        qdd = forward_dynamics(self.spec.arm, JointState(x[:2], x[2:]), tau, force)
        return np.concatenate([x[2:], qdd])

    def check(self, t: float, x: np.ndarray) -> None:
        speed = float(np.max(np.abs(x[2:])))
        if not np.isfinite(speed) or speed > self.spec.divergence_limit:
            raise IntegrationDivergenceError(
                f"trial {self.spec.index} ({self.spec.kind.value}, {self.spec.direction} deg): "
                f"joint speed {speed:.1f} rad/s exceeds {self.spec.divergence_limit} at t={t:.4f} s"
            )
        if self.spec.field.loop_gain is not None:
            self.measured.append(self.hand_force(t, x)[1])


def simulate_trial(spec: TrialSpec) -> TrialRecord:
    """Integrate one trial from rest at the home position.

    Raises:
        IntegrationDivergenceError: joint speed exceeded the divergence limit
        MissingBaselineError: impedance policy has no baseline for the direction
    """
    system = _ClosedLoop(spec)
    q0 = inverse_kinematics(spec.arm, spec.home)
    t, states = integrate_fixed_step(
        system, np.concatenate([q0, np.zeros(2)]), spec.n_steps, spec.step, spec.stride, system.check
    )
    q, qd = states[:, :2], states[:, 2:]
    p = forward_kinematics(spec.arm, q)
    v = np.einsum("nij,nj->ni", jacobian(spec.arm, q), qd)
    if spec.field.loop_gain is None:
        f = np.array([-system.hand_force(ti, xi)[1] for ti, xi in zip(t, states)])
    else:
        steps = np.rint(t / spec.step).astype(int)
        f = np.array(
            [-system.hand_force(ti, xi, system.measured[k])[1] for ti, xi, k in zip(t, states, steps)]
        )
    logger.debug(
        f"Simulated trial {spec.index} ({spec.kind.value}, {spec.direction} deg): "
        f"{len(t)} samples"
    )
    return TrialRecord(t=t, p=p, v=v, f=f, q=q, condition=TrialCondition.from_spec(spec))


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Logged series at ``step`` against the same trial at half the step."""

    step: float
    max_position_diff: float
    max_force_diff: float
    n_samples: int
    coarse: TrialRecord = field(repr=False)
    fine: TrialRecord = field(repr=False)


def halve_step_check(spec: TrialSpec) -> ConvergenceReport:
    """Re-run ``spec`` at half the step and compare the logged series."""
    coarse = simulate_trial(spec)
    fine = simulate_trial(replace(spec, step=spec.step / 2.0))
    n = min(len(coarse), len(fine))
    return ConvergenceReport(
        step=spec.step,
        max_position_diff=float(np.max(np.abs(coarse.p[:n] - fine.p[:n]))),
        max_force_diff=float(np.max(np.abs(coarse.f[:n] - fine.f[:n]))),
        n_samples=n,
        coarse=coarse,
        fine=fine,
    )


# =============================================================================
# Trial templates
# =============================================================================


@dataclass(frozen=True, eq=False)
class TrialTemplate:
    """Everything shared by the trials of one simulated experiment."""

    arm: ArmParams = field(default_factory=ArmParams)
    home: tuple[float, float] = (0.0, 0.0)
    reach: float = DEFAULT_REACH
    movement_time: float = DEFAULT_MOVEMENT_TIME
    settle_time: float = DEFAULT_SETTLE_TIME
    step: float = DEFAULT_STEP
    log_rate: float = DEFAULT_LOG_RATE
    alpha: float = DEFAULT_ALPHA
    half_width: float = DEFAULT_HALF_WIDTH
    k_wall: float = DEFAULT_K_WALL
    b_wall: float = DEFAULT_B_WALL
    channel_mode: ChannelMode = ChannelMode.RIGID
    model: ModelKind = ModelKind.STANDARD
    baselines: BaselineSet | None = None
    divergence_limit: float = DIVERGENCE_LIMIT
    force_loop: bool = False

    def target(self, direction: float) -> tuple[float, float]:
        goal = np.asarray(self.home) + self.reach * direction_vector(direction)
        return float(goal[0]), float(goal[1])

    def field_for(self, kind: FieldKind, direction: float) -> FieldSpec:
        kind = FieldKind(kind)
        rendered = self._field(kind, direction)
        if self.force_loop and kind is not FieldKind.NULL and not rendered.is_rigid_clamp:
            return replace(rendered, loop_gain=robot_gain(kind))
        return rendered

    def _field(self, kind: FieldKind, direction: float) -> FieldSpec:
        if kind is FieldKind.CURL:
            return FieldSpec.curl(self.alpha)
        if kind is FieldKind.CLAMP:
            channel = ChannelGeometry(
                origin=self.home,
                target=self.target(direction),
                half_width=self.half_width,
                k_wall=self.k_wall,
                b_wall=self.b_wall,
                mode=self.channel_mode,
            )
            return FieldSpec.clamp(channel, self.alpha)
        return FieldSpec.null()

    def spec(
        self,
        direction: float,
        kind: TrialKind,
        representation: RepresentationParams | None = None,
        scaling: ImpedanceScaling | None = None,
        *,
        index: int = 0,
        block: int = 0,
        group: int | None = None,
        feedback: bool = False,
    ) -> TrialSpec:
        kind = TrialKind(kind)
        controller = ControllerSpec(
            model=self.model,
            representation=representation,
            scaling=scaling if scaling is not None else ImpedanceScaling(),
            alpha_true=self.alpha,
            baselines=self.baselines,
        )
        return TrialSpec(
            direction=float(direction),
            field=self.field_for(kind.field_kind, direction),
            controller=controller,
            kind=kind,
            index=index,
            block=block,
            group=group,
            feedback=feedback,
            arm=self.arm,
            home=self.home,
            reach=self.reach,
            movement_time=self.movement_time,
            duration=self.movement_time + self.settle_time,
            step=self.step,
            log_rate=self.log_rate,
            divergence_limit=self.divergence_limit,
        )

    def clamp_spec(
        self,
        direction: float,
        representation: RepresentationParams | None = None,
        scaling: ImpedanceScaling | None = None,
        kind: TrialKind = TrialKind.TEST_CLAMP,
    ) -> TrialSpec:
        return self.spec(direction, kind, representation, scaling)


def protocol_trial_specs(
    protocol: Protocol,
    template: TrialTemplate,
    learned: RepresentationParams | None,
    baseline_scaling: ImpedanceScaling | None = None,
    post_scaling: ImpedanceScaling | None = None,
) -> list[TrialSpec]:
    """Trial specs for a schedule.

    Baseline-block trials run with no learned representation and the
    baseline impedance; later blocks use the learned (asymptotic)
    representation and the post-adaptation impedance.
    """
    specs = []
    for trial in protocol.trials:
        before = trial.kind.phase is Phase.BASELINE
        specs.append(
            template.spec(
                trial.target,
                trial.kind,
                None if before else learned,
                baseline_scaling if before else post_scaling,
                index=trial.index,
                block=trial.block,
                group=protocol.group,
                feedback=trial.feedback,
            )
        )
    return specs


@dataclass(frozen=True, eq=False)
class HandImpedance:
    """Cartesian stiffness (N/m) and inertia (kg) halfway along one reach."""

    direction: int
    point: np.ndarray
    stiffness: np.ndarray
    inertia: np.ndarray

    @property
    def normal(self) -> np.ndarray:
        u = direction_vector(self.direction)
        return np.array([-u[1], u[0]])

    @property
    def lateral_stiffness(self) -> float:
        return float(self.normal @ self.stiffness @ self.normal)


def hand_impedance_profile(
    template: TrialTemplate, scaling: ImpedanceScaling, directions=DIRECTIONS
) -> list[HandImpedance]:
    """Stiffness and inertia at mid-reach for each direction under ``scaling``."""
    home = np.asarray(template.home, dtype=float)
    points = np.array([home + 0.5 * template.reach * direction_vector(d) for d in directions])
    q = inverse_kinematics(template.arm, points)
    stiffness = hand_stiffness(template.arm, q, scaling.stiffness)
    inertia = hand_inertia(template.arm, q)
    return [
        HandImpedance(int(d) % 360, points[i], stiffness[i], inertia[i])
        for i, d in enumerate(directions)
    ]
