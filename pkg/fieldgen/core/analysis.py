"""Measurement pipeline: velocities, movement windows, errors, adaptation indices, curves."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.signal import butter, filtfilt

from .controllers import wrap_deg
from .environment import FieldKind
from .exceptions import (
    DegenerateRegressionError,
    EmptyDatasetError,
    MissingBaselineError,
    MissingDirectionError,
    MissingGroupError,
    NoMovementError,
    TooShortSeriesError,
)
from .protocol import DIRECTIONS, Phase
from .trial import TrialRecord

logger = logging.getLogger("fieldgen")

CUTOFF_HZ = 50.0
FILTER_ORDER = 2
MIN_SAMPLES = 20
START_SPEED = 0.05  # m/s
STOP_SPEED = 0.02  # m/s
MIN_PREDICTOR_VARIANCE = 1e-8
INDEX_SOFT_BOUND = 1.5

OFFSETS = (-135, -90, -45, 0, 45, 90, 135, 180)


# =============================================================================
# Kinematics
# =============================================================================


def velocity_filter(rate: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of the 2nd-order 50 Hz low-pass Butterworth at ``rate``."""
    return butter(FILTER_ORDER, CUTOFF_HZ, btype="low", fs=rate)


def filtered_velocity(position, rate: float) -> np.ndarray:
    """Central difference followed by zero-phase low-pass filtering.

    Raises:
        TooShortSeriesError: fewer than 20 samples
    """
    position = np.asarray(position, dtype=float)
    if position.shape[0] < MIN_SAMPLES:
        raise TooShortSeriesError(
            f"{position.shape[0]} samples; at least {MIN_SAMPLES} are needed for filtering"
        )
    if rate <= 2 * CUTOFF_HZ:
        raise ValueError(f"sample rate {rate} Hz is too low for a {CUTOFF_HZ} Hz filter")
    raw = np.gradient(position, 1.0 / rate, axis=0)
    b, a = velocity_filter(rate)
    return filtfilt(b, a, raw, axis=0)


@dataclass(frozen=True)
class MovementWindow:
    start: int
    stop: int
    t_start: float
    t_stop: float


def movement_window(velocity, t) -> MovementWindow:
    """Onset above 5 cm/s; offset at the first drop below 2 cm/s after peak speed.

    Raises:
        NoMovementError: speed never exceeds 5 cm/s
    """
    velocity = np.asarray(velocity, dtype=float)
    speed = np.linalg.norm(velocity, axis=-1) if velocity.ndim == 2 else np.abs(velocity)
    moving = np.flatnonzero(speed > START_SPEED)
    if moving.size == 0:
        raise NoMovementError(
            f"peak speed {float(np.max(speed, initial=0.0)):.4f} m/s never exceeds "
            f"{START_SPEED} m/s"
        )
    start = int(moving[0])
    peak = start + int(np.argmax(speed[start:]))
    stopped = np.flatnonzero(speed[peak:] < STOP_SPEED)
    stop = peak + int(stopped[0]) if stopped.size else len(speed) - 1
    return MovementWindow(start=start, stop=stop, t_start=float(t[start]), t_stop=float(t[stop]))


def lateral_deviation(p, start, target) -> np.ndarray:
    """Signed distance of ``p`` from the start->target line, positive to the left."""
    start = np.asarray(start, dtype=float)
    u = np.asarray(target, dtype=float) - start
    u = u / np.linalg.norm(u)
    rel = np.asarray(p, dtype=float) - start
    return u[0] * rel[..., 1] - u[1] * rel[..., 0]


def path_perpendicular_error(t, p, target, rate: float) -> float:
    """Signed PE (mm) of a sampled path; see ``perpendicular_error``."""
    p = np.asarray(p, dtype=float)
    window = movement_window(filtered_velocity(p, rate), t)
    segment = p[window.start : window.stop + 1]
    deviation = lateral_deviation(segment, segment[0], target)
    return float(deviation[int(np.argmax(np.abs(deviation)))] * 1e3)


def perpendicular_error(record: TrialRecord) -> float:
    """Largest signed lateral deviation (mm) from the line joining the movement start and the target."""
    return path_perpendicular_error(record.t, record.p, record.condition.target, record.rate)


# =============================================================================
# Adaptation index
# =============================================================================


@dataclass(frozen=True)
class AdaptationIndex:
    value: float
    direction: int
    phase: Phase
    group: int | None = None
    trial: int | None = None


def regression_slope(predictor, response) -> float:
    """OLS slope of ``response`` on ``predictor`` with an intercept.

    Raises:
        DegenerateRegressionError: predictor variance below 1e-8
    """
    x = np.asarray(predictor, dtype=float)
    y = np.asarray(response, dtype=float)
    if x.size < 2 or np.var(x) < MIN_PREDICTOR_VARIANCE:
        raise DegenerateRegressionError(
            f"predictor variance {float(np.var(x)) if x.size else 0.0:.3g} is below "
            f"{MIN_PREDICTOR_VARIANCE}"
        )
    design = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0])


def adaptation_index(record: TrialRecord, alpha_true: float) -> AdaptationIndex:
    """Slope of the measured lateral channel force against the ideal field's lateral force.

    The predictor is ``alpha_true * v_parallel``; the response is the
    component of the applied force along the channel normal.
    """
    cond = record.condition
    start = np.asarray(cond.home)
    axis = np.asarray(cond.target) - start
    axis = axis / np.linalg.norm(axis)
    normal = np.array([-axis[1], axis[0]])

    velocity = filtered_velocity(record.p, record.rate)
    window = movement_window(velocity, record.t)
    span = slice(window.start, window.stop + 1)
    predictor = alpha_true * (velocity[span] @ axis)
    response = record.f[span] @ normal
    value = regression_slope(predictor, response)
    if not abs(value) <= INDEX_SOFT_BOUND:
        logger.warning(
            f"Adaptation index {value:.3f} outside [-{INDEX_SOFT_BOUND}, {INDEX_SOFT_BOUND}] "
            f"(trial {cond.index}, {cond.direction} deg)"
        )
    return AdaptationIndex(
        value=value,
        direction=int(round(cond.direction)) % 360,
        phase=cond.phase,
        group=cond.group,
        trial=cond.index,
    )


def analyze_records(records: Iterable[TrialRecord], alpha_true: float) -> list[AdaptationIndex]:
    """Indices for every clamp trial, in trial order."""
    indices = [
        adaptation_index(record, alpha_true) for record in records if record.condition.is_clamp
    ]
    return sorted(indices, key=lambda i: (i.group if i.group is not None else -1, i.trial or 0))


# =============================================================================
# Generalization curves
# =============================================================================


@dataclass(frozen=True)
class CurvePoint:
    offset: int
    direction: int
    group: int
    values: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def sem(self) -> float:
        if self.n < 2:
            return 0.0
        return float(np.std(self.values, ddof=1) / np.sqrt(self.n))


@dataclass(frozen=True)
class GeneralizationCurve:
    """Mean index per angular offset.

    ``anchor`` is the training direction for intra curves and the test
    direction for inter curves.
    """

    kind: str
    anchor: int
    points: tuple[CurvePoint, ...]
    baseline_corrected: bool = False

    def point(self, offset: float) -> CurvePoint:
        key = int(round(wrap_deg(offset)))
        for pt in self.points:
            if pt.offset == key:
                return pt
        raise MissingDirectionError(f"curve has no entry at offset {key} deg")

    def mean(self, offset: float) -> float:
        return self.point(offset).mean

    @property
    def offsets(self) -> np.ndarray:
        return np.array([pt.offset for pt in self.points])

    @property
    def means(self) -> np.ndarray:
        return np.array([pt.mean for pt in self.points])

    @property
    def sems(self) -> np.ndarray:
        return np.array([pt.sem for pt in self.points])

    def closed(self) -> tuple[np.ndarray, np.ndarray]:
        """Offsets and means with the 180 entry repeated at -180 for plotting."""
        return np.concatenate([[-180], self.offsets]), np.concatenate(
            [[self.mean(180)], self.means]
        )


def _by_key(indices: Iterable[AdaptationIndex], phase: Phase) -> dict[tuple[int, int], list[float]]:
    table: dict[tuple[int, int], list[float]] = {}
    for idx in indices:
        if idx.phase is not phase or idx.group is None:
            continue
        table.setdefault((int(idx.group) % 360, idx.direction), []).append(idx.value)
    return table


def intra_curve(
    indices: Iterable[AdaptationIndex], group: int, phase: Phase = Phase.TEST
) -> GeneralizationCurve:
    """Indices of one group against (test - train) offset.

    Raises:
        MissingDirectionError: a direction has no index for the group
    """
    table = _by_key(indices, phase)
    points = []
    for offset in OFFSETS:
        direction = int((group + offset) % 360)
        values = table.get((group, direction))
        if not values:
            raise MissingDirectionError(
                f"group {group}: no {phase.value} indices for direction {direction} deg"
            )
        points.append(CurvePoint(offset, direction, group, tuple(values)))
    return GeneralizationCurve("intra", group, tuple(points))


def inter_curve(
    indices: Iterable[AdaptationIndex], test_direction: int, phase: Phase = Phase.TEST
) -> GeneralizationCurve:
    """Indices toward one test direction against (train - test) offset, one group per offset.

    Raises:
        MissingGroupError: a training group has no index for the direction
    """
    table = _by_key(indices, phase)
    points = []
    for offset in OFFSETS:
        group = int((test_direction + offset) % 360)
        values = table.get((group, test_direction))
        if not values:
            raise MissingGroupError(
                f"direction {test_direction}: no {phase.value} indices from group {group} deg"
            )
        points.append(CurvePoint(offset, test_direction, group, tuple(values)))
    return GeneralizationCurve("inter", test_direction, tuple(points))


def asymmetry(curve: GeneralizationCurve, sign: int = 1) -> float:
    """Index at +45 deg minus index at -45 deg (``sign=-1`` flips the convention)."""
    return sign * (curve.mean(45) - curve.mean(-45))


def baseline_correct(
    curve: GeneralizationCurve,
    baseline: Mapping[int, float] | Mapping[tuple[int, int], float],
) -> GeneralizationCurve:
    """Subtract baseline indices from every repetition before averaging.

    ``baseline`` is keyed by direction, or by (group, direction) when each
    group has its own baseline.

    Raises:
        MissingBaselineError: a direction of the curve has no baseline index
    """
    points = []
    for pt in curve.points:
        if (pt.group, pt.direction) in baseline:
            ref = baseline[(pt.group, pt.direction)]  # type: ignore[index]
        elif pt.direction in baseline:
            ref = baseline[pt.direction]  # type: ignore[index]
        else:
            raise MissingBaselineError(f"no baseline index for direction {pt.direction} deg")
        points.append(replace(pt, values=tuple(v - ref for v in pt.values)))
    return replace(curve, points=tuple(points), baseline_corrected=True)


def baseline_indices(
    indices: Iterable[AdaptationIndex], by_group: bool = False
) -> dict:
    """Mean baseline-phase index per direction (or per (group, direction))."""
    table: dict = {}
    for idx in indices:
        if idx.phase is not Phase.BASELINE:
            continue
        key = (int(idx.group or 0) % 360, idx.direction) if by_group else idx.direction
        table.setdefault(key, []).append(idx.value)
    return {key: float(np.mean(values)) for key, values in table.items()}


def all_intra_curves(
    indices: Sequence[AdaptationIndex], phase: Phase = Phase.TEST
) -> list[GeneralizationCurve]:
    groups = sorted({int(i.group) % 360 for i in indices if i.group is not None})
    if not groups:
        raise EmptyDatasetError("no grouped indices to build curves from")
    return [intra_curve(indices, g, phase) for g in groups]


# =============================================================================
# Learning and error summaries
# =============================================================================


def learning_curve(
    indices: Iterable[AdaptationIndex], group: int
) -> list[tuple[int, float]]:
    """(trial, index) for training-direction clamps during adaptation and test."""
    series = [
        (int(i.trial or 0), i.value)
        for i in indices
        if i.group == group
        and i.direction == group
        and i.phase in (Phase.ADAPTATION, Phase.TEST)
    ]
    return sorted(series)


def pe_series(records: Iterable[TrialRecord]) -> list[tuple[int, float]]:
    """(trial, PE in mm) for every non-clamp trial in protocol order."""
    return sorted(
        (rec.condition.index, perpendicular_error(rec))
        for rec in records
        if not rec.condition.is_clamp
    )


def early_pe(records: Iterable[TrialRecord], n: int = 20) -> float:
    """Mean PE over the first ``n`` curl-field trials."""
    field_trials = sorted(
        (rec for rec in records if rec.condition.trial_kind.field_kind is FieldKind.CURL),
        key=lambda rec: rec.condition.index,
    )[:n]
    if not field_trials:
        raise EmptyDatasetError("no curl-field trials")
    return float(np.mean([perpendicular_error(rec) for rec in field_trials]))


def baseline_correlation(
    pe_by_direction: Mapping[int, float], index_by_direction: Mapping[int, float]
) -> float:
    """Pearson correlation between baseline PE and baseline index across directions."""
    common = sorted(set(pe_by_direction) & set(index_by_direction))
    if len(common) < 3:
        raise EmptyDatasetError("need at least three directions to correlate")
    x = np.array([pe_by_direction[d] for d in common])
    y = np.array([index_by_direction[d] for d in common])
    return float(np.corrcoef(x, y)[0, 1])


@dataclass
class CurveSet:
    """Intra curves per group and inter curves per test direction."""

    intra: list[GeneralizationCurve] = field(default_factory=list)
    inter: list[GeneralizationCurve] = field(default_factory=list)

    def asymmetries(self, sign: int = 1) -> dict[tuple[str, int], float]:
        return {(c.kind, c.anchor): asymmetry(c, sign) for c in self.intra + self.inter}


def build_curves(
    indices: Sequence[AdaptationIndex],
    phase: Phase = Phase.TEST,
    baseline: Mapping | None = None,
) -> CurveSet:
    """Every curve the dataset supports; inter curves need all eight groups."""
    intra = all_intra_curves(indices, phase)
    groups = {c.anchor for c in intra}
    inter = (
        [inter_curve(indices, d, phase) for d in DIRECTIONS] if groups == set(DIRECTIONS) else []
    )
    if baseline is not None:
        intra = [baseline_correct(c, baseline) for c in intra]
        inter = [baseline_correct(c, baseline) for c in inter]
    return CurveSet(intra=intra, inter=inter)
