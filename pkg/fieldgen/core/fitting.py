"""Maximum-likelihood fits of the two representation models and their comparison."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import qmc

from .analysis import AdaptationIndex, adaptation_index
from .controllers import (
    ImpedanceScaling,
    ModelKind,
    RepresentationParams,
    wrap_deg,
)
from .exceptions import (
    DataFormatError,
    EmptyDatasetError,
    InvalidDirectionError,
    MismatchedDatasetError,
    MissingBaselineError,
    MissingDirectionError,
    NonFinitePredictionError,
    SmallSampleError,
)
from .protocol import DIRECTIONS, Phase
from .trial import TrialTemplate, simulate_trial

logger = logging.getLogger("fieldgen")

SSE_FLOOR = 1e-12
AMPLITUDE_BOUNDS = (0.0, 2.0)
SIGMA_BOUNDS = (2.0, 120.0)
MU_BOUNDS = (-90.0, 90.0)
SCALING_BOUNDS = (0.0, 3.0)
UNIDENTIFIABLE_AMPLITUDE = 1e-3

Key = tuple[int, int, Phase]


# =============================================================================
# Data
# =============================================================================


@dataclass(frozen=True)
class Observation:
    group: int
    direction: int
    phase: Phase
    index: float
    weight: float = 1.0

    @property
    def key(self) -> Key:
        return (self.group, self.direction, self.phase)


@dataclass(frozen=True)
class IndexDataset:
    """Group-mean adaptation indices keyed by (group, direction, phase)."""

    observations: tuple[Observation, ...]

    def __post_init__(self) -> None:
        seen: set[Key] = set()
        for obs in self.observations:
            for angle in (obs.group, obs.direction):
                if angle not in DIRECTIONS:
                    raise InvalidDirectionError(f"{angle} deg is not on the 45 deg grid")
            if obs.key in seen:
                raise DataFormatError(
                    f"duplicate observation for group {obs.group}, direction {obs.direction}, "
                    f"phase {obs.phase.value}"
                )
            seen.add(obs.key)

    def __len__(self) -> int:
        return len(self.observations)

    @classmethod
    def from_indices(cls, indices: Iterable[AdaptationIndex]) -> "IndexDataset":
        """Average repetitions into one observation per (group, direction, phase)."""
        table: dict[Key, list[float]] = {}
        for idx in indices:
            if idx.group is None:
                continue
            table.setdefault((int(idx.group) % 360, idx.direction, idx.phase), []).append(idx.value)
        obs = tuple(
            Observation(g, d, ph, float(np.mean(vals)))
            for (g, d, ph), vals in sorted(table.items(), key=lambda kv: _sort_key(kv[0]))
        )
        return cls(obs)

    def select(self, phase: Phase) -> "IndexDataset":
        return IndexDataset(tuple(o for o in self.observations if o.phase is phase))

    def for_group(self, group: int) -> "IndexDataset":
        return IndexDataset(tuple(o for o in self.observations if o.group == group))

    @property
    def groups(self) -> list[int]:
        return sorted({o.group for o in self.observations})

    @property
    def keys(self) -> list[Key]:
        return [o.key for o in self.observations]

    @property
    def values(self) -> np.ndarray:
        return np.array([o.index for o in self.observations])

    @property
    def weights(self) -> np.ndarray:
        return np.array([o.weight for o in self.observations])

    def baseline_table(self) -> dict[tuple[int, int], float]:
        return {
            (o.group, o.direction): o.index
            for o in self.observations
            if o.phase is Phase.BASELINE
        }

    def direction_means(self, phase: Phase) -> dict[int, float]:
        table: dict[int, list[float]] = {}
        for o in self.observations:
            if o.phase is phase:
                table.setdefault(o.direction, []).append(o.index)
        return {d: float(np.mean(v)) for d, v in sorted(table.items())}

    @property
    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for o in sorted(self.observations, key=lambda o: _sort_key(o.key)):
            digest.update(f"{o.group},{o.direction},{o.phase.value},{o.index!r},{o.weight!r};".encode())
        return digest.hexdigest()[:16]


def _sort_key(key: Key) -> tuple[str, int, int]:
    group, direction, phase = key
    return (phase.value, group, direction)


def _gauss(delta, sigma):
    return np.exp(-np.square(wrap_deg(delta)) / (2.0 * np.square(sigma)))


# =============================================================================
# Impedance response surrogate
# =============================================================================


@dataclass(frozen=True, eq=False)
class ImpedanceResponse:
    """Affine model of the clamp index under the impedance controller.

    index(d) = c0 + alpha_k ck + alpha_b cb + fraction ca, with coefficients
    per direction obtained from four basis simulations.
    """

    directions: tuple[int, ...]
    c0: np.ndarray
    ck: np.ndarray
    cb: np.ndarray
    ca: np.ndarray

    def _row(self, direction: int) -> int:
        key = int(round(direction)) % 360
        try:
            return self.directions.index(key)
        except ValueError:
            raise MissingDirectionError(f"impedance response has no direction {key} deg") from None

    def coefficients(self, direction: int) -> tuple[float, float, float, float]:
        i = self._row(direction)
        return float(self.c0[i]), float(self.ck[i]), float(self.cb[i]), float(self.ca[i])

    def index(self, direction: int, alpha_k: float, alpha_b: float, fraction: float = 0.0) -> float:
        c0, ck, cb, ca = self.coefficients(direction)
        return c0 + alpha_k * ck + alpha_b * cb + fraction * ca

    def arrays(self, directions: Sequence[int]) -> tuple[np.ndarray, ...]:
        rows = [self._row(d) for d in directions]
        return self.c0[rows], self.ck[rows], self.cb[rows], self.ca[rows]

    @classmethod
    def build(
        cls,
        template: TrialTemplate,
        directions: Sequence[int] = DIRECTIONS,
        mapper: Callable[[Callable, list], Iterable] = map,
    ) -> "ImpedanceResponse":
        """Simulate the four basis clamp trials per direction."""
        basis = [
            (ImpedanceScaling(0.0, 0.0), 0.0),
            (ImpedanceScaling(1.0, 0.0), 0.0),
            (ImpedanceScaling(0.0, 1.0), 0.0),
            (ImpedanceScaling(0.0, 0.0), 1.0),
        ]
        specs = []
        for d in directions:
            for scaling, fraction in basis:
                rep = (
                    RepresentationParams(ModelKind.IMPEDANCE, fraction, 30.0, d)
                    if fraction
                    else None
                )
                specs.append(template.clamp_spec(d, rep, scaling))
        logger.info(f"Building impedance response from {len(specs)} basis simulations")
        values = np.array(
            list(mapper(_clamp_index, [(spec, template.alpha) for spec in specs]))
        ).reshape(len(directions), len(basis))
        c0 = values[:, 0]
        return cls(
            directions=tuple(int(d) % 360 for d in directions),
            c0=c0,
            ck=values[:, 1] - c0,
            cb=values[:, 2] - c0,
            ca=values[:, 3] - c0,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "directions": list(self.directions),
            "c0": self.c0.tolist(),
            "ck": self.ck.tolist(),
            "cb": self.cb.tolist(),
            "ca": self.ca.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ImpedanceResponse":
        return cls(
            directions=tuple(int(d) for d in data["directions"]),
            **{k: np.asarray(data[k], dtype=float) for k in ("c0", "ck", "cb", "ca")},
        )


def _clamp_index(job: tuple) -> float:
    spec, alpha = job
    return adaptation_index(simulate_trial(spec), alpha).value


# =============================================================================
# Predictions and likelihood
# =============================================================================


@dataclass(frozen=True)
class ModelParams:
    """Fitted parameters: one representation per group plus shared impedance scalings."""

    model: ModelKind
    groups: Mapping[int, RepresentationParams] = field(default_factory=dict)
    scaling: ImpedanceScaling | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "groups": {
                str(g): {
                    "A": rep.amplitude,
                    "sigma": rep.sigma,
                    **({"mu": rep.mu} if self.model is ModelKind.STANDARD else {}),
                }
                for g, rep in sorted(self.groups.items())
            }
        }
        if self.scaling is not None:
            out["alpha_k"] = self.scaling.alpha_k
            out["alpha_b"] = self.scaling.alpha_b
        return out

    @classmethod
    def from_dict(cls, model: ModelKind | str, data: Mapping[str, Any]) -> "ModelParams":
        model = ModelKind(model)
        groups = {
            int(g): RepresentationParams(
                model,
                float(p["A"]),
                float(p["sigma"]),
                int(g),
                float(p["mu"]) if model is ModelKind.STANDARD else None,
            )
            for g, p in data.get("groups", {}).items()
        }
        scaling = None
        if "alpha_k" in data:
            scaling = ImpedanceScaling(float(data["alpha_k"]), float(data["alpha_b"]))
        return cls(model, groups, scaling)


@dataclass(frozen=True, eq=False)
class PredictionContext:
    """What predictions need beyond the parameters.

    ``baseline`` holds measured baseline indices per (group, direction); the
    standard model adds them unless ``corrected`` is set. ``response`` backs
    surrogate impedance predictions, ``template`` full simulations.
    """

    baseline: Mapping[tuple[int, int], float] = field(default_factory=dict)
    corrected: bool = False
    response: ImpedanceResponse | None = None
    template: TrialTemplate | None = None
    alpha_true: float = 15.0

    def with_measured_baseline(self, data: IndexDataset) -> "PredictionContext":
        return PredictionContext(
            baseline=data.baseline_table(),
            corrected=self.corrected,
            response=self.response,
            template=self.template,
            alpha_true=self.alpha_true,
        )


def _fraction(params: ModelParams, group: int, direction: int, phase: Phase) -> float:
    if phase is Phase.BASELINE:
        return 0.0
    if group not in params.groups:
        raise MissingDirectionError(f"no representation for group {group} deg")
    return float(params.groups[group].fraction(direction))


def predict_indices(
    model: ModelKind | str,
    params: ModelParams,
    keys: Iterable[Key],
    context: PredictionContext,
    method: str = "surrogate",
) -> dict[Key, float]:
    """Predicted index for each (group, direction, phase) key.

    Raises:
        MissingBaselineError: uncorrected standard prediction without a measured baseline
        NonFinitePredictionError: a prediction is NaN or infinite
    """
    model = ModelKind(model)
    out: dict[Key, float] = {}
    for key in keys:
        group, direction, phase = key
        fraction = _fraction(params, group, direction, phase)
        if model is ModelKind.STANDARD:
            value = 0.0 if phase is Phase.BASELINE else fraction
            if phase is not Phase.BASELINE and not context.corrected:
                if (group, direction) not in context.baseline:
                    raise MissingBaselineError(
                        f"no measured baseline for group {group}, direction {direction} deg"
                    )
                value += context.baseline[(group, direction)]
        else:
            scaling = params.scaling or ImpedanceScaling()
            if method == "simulate":
                if context.template is None:
                    raise ValueError("simulated predictions need a trial template")
                rep = params.groups.get(group) if phase is not Phase.BASELINE else None
                spec = context.template.clamp_spec(direction, rep, scaling)
                value = adaptation_index(simulate_trial(spec), context.alpha_true).value
            else:
                if context.response is None:
                    raise ValueError("surrogate predictions need an impedance response")
                value = context.response.index(direction, scaling.alpha_k, scaling.alpha_b, fraction)
        if not np.isfinite(value):
            raise NonFinitePredictionError(f"prediction for {key} is {value}")
        out[key] = float(value)
    return out


def sse(residuals, weights=None) -> float:
    r = np.asarray(residuals, dtype=float)
    w = np.ones_like(r) if weights is None else np.asarray(weights, dtype=float)
    return float(np.sum(w * r * r))


def nll_from_sse(total: float, n: int) -> float:
    """Gaussian NLL with the variance profiled out: (n/2)(1 + ln(2 pi SSE / n))."""
    return 0.5 * n * (1.0 + np.log(2.0 * np.pi * max(total, SSE_FLOOR) / n))


def nll(
    params: ModelParams,
    model: ModelKind | str,
    data: IndexDataset,
    context: PredictionContext,
    method: str = "surrogate",
) -> float:
    preds = predict_indices(model, params, data.keys, context, method)
    residuals = data.values - np.array([preds[k] for k in data.keys])
    return nll_from_sse(sse(residuals, data.weights), len(data))


def aic(nll_value: float, k: int) -> float:
    return 2.0 * nll_value + 2.0 * k


def aicc(nll_value: float, k: int, n: int) -> float:
    """AIC with the small-sample correction 2k(k+1)/(n-k-1).

    Raises:
        SmallSampleError: n <= k + 1; the error carries the uncorrected AIC
    """
    if n <= k + 1:
        raise SmallSampleError(f"n={n} is too small for k={k} parameters", aic(nll_value, k))
    return aic(nll_value, k) + 2.0 * k * (k + 1) / (n - k - 1)


# =============================================================================
# Optimization
# =============================================================================


@dataclass(frozen=True)
class FitOptions:
    restarts: int = 16
    max_iter: int = 5000
    f_tol: float = 1e-8
    x_tol: float = 1e-6
    seed: int = 0
    amplitude_bounds: tuple[float, float] = AMPLITUDE_BOUNDS
    sigma_bounds: tuple[float, float] = SIGMA_BOUNDS
    mu_bounds: tuple[float, float] = MU_BOUNDS
    scaling_bounds: tuple[float, float] = SCALING_BOUNDS
    method: str = "surrogate"


@dataclass
class _SearchResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool


def multistart_simplex(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence[tuple[float, float]],
    options: FitOptions,
) -> _SearchResult:
    """Nelder-Mead from Latin-hypercube starts; the lowest objective wins."""
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    sampler = qmc.LatinHypercube(d=len(bounds), seed=options.seed)
    starts = qmc.scale(sampler.random(options.restarts), lo, hi)
    best: _SearchResult | None = None
    iterations = 0
    for x0 in starts:
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=list(bounds),
            options={"maxiter": options.max_iter, "fatol": options.f_tol, "xatol": options.x_tol},
        )
        iterations += int(res.nit)
        if best is None or res.fun < best.fun:
            best = _SearchResult(np.asarray(res.x), float(res.fun), 0, bool(res.success))
    assert best is not None
    best.iterations = iterations
    return best


@dataclass
class FitResult:
    model: ModelKind
    phase: Phase
    params: ModelParams
    nll: float
    rmse: float
    aicc: float | None
    aic: float
    k: int
    n: int
    seed: int
    converged: bool
    iterations: int
    restarts: int
    dataset: str = ""
    flags: list[str] = field(default_factory=list)
    predictions: dict[Key, float] = field(default_factory=dict)

    @property
    def criterion(self) -> float:
        return self.aicc if self.aicc is not None else self.aic

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model.value,
            "phase": self.phase.value,
            "params": self.params.to_dict(),
            "nll": self.nll,
            "rmse": self.rmse,
            "aicc": self.aicc,
            "aic": self.aic,
            "k": self.k,
            "n": self.n,
            "seed": self.seed,
            "converged": self.converged,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "dataset": self.dataset,
            "flags": list(self.flags),
            "predictions": [
                {"group": g, "direction": d, "phase": ph.value, "index": v}
                for (g, d, ph), v in sorted(self.predictions.items(), key=lambda kv: _sort_key(kv[0]))
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FitResult":
        try:
            model = ModelKind(data["model"])
            return cls(
                model=model,
                phase=Phase(data["phase"]),
                params=ModelParams.from_dict(model, data["params"]),
                nll=float(data["nll"]),
                rmse=float(data["rmse"]),
                aicc=None if data.get("aicc") is None else float(data["aicc"]),
                aic=float(data.get("aic", aic(float(data["nll"]), int(data["k"])))),
                k=int(data["k"]),
                n=int(data["n"]),
                seed=int(data["seed"]),
                converged=bool(data["converged"]),
                iterations=int(data.get("iterations", 0)),
                restarts=int(data.get("restarts", 0)),
                dataset=str(data.get("dataset", "")),
                flags=list(data.get("flags", [])),
                predictions={
                    (int(p["group"]), int(p["direction"]), Phase(p["phase"])): float(p["index"])
                    for p in data.get("predictions", [])
                },
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataFormatError(f"invalid fit result: {e}") from e


def _finish(
    model: ModelKind,
    phase: Phase,
    params: ModelParams,
    data: IndexDataset,
    context: PredictionContext,
    k: int,
    options: FitOptions,
    converged: bool,
    iterations: int,
    flags: list[str],
) -> FitResult:
    preds = predict_indices(model, params, data.keys, context, options.method)
    residuals = data.values - np.array([preds[key] for key in data.keys])
    total = sse(residuals, data.weights)
    n = len(data)
    nll_value = nll_from_sse(total, n)
    try:
        aicc_value: float | None = aicc(nll_value, k, n)
    except SmallSampleError as e:
        aicc_value = None
        flags.append(f"AICc undefined ({e}); AIC reported")
    if not converged:
        flags.append("optimizer hit the iteration cap before converging")
        logger.warning(f"{model.value} fit did not converge within {options.max_iter} iterations")
    return FitResult(
        model=model,
        phase=phase,
        params=params,
        nll=nll_value,
        rmse=float(np.sqrt(total / n)),
        aicc=aicc_value,
        aic=aic(nll_value, k),
        k=k,
        n=n,
        seed=options.seed,
        converged=converged,
        iterations=iterations,
        restarts=options.restarts,
        dataset=data.fingerprint,
        flags=flags,
        predictions=preds,
    )


def _group_arrays(data: IndexDataset, group: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    obs = [o for o in data.observations if o.group == group]
    return (
        np.array([o.direction for o in obs], dtype=float),
        np.array([o.index for o in obs]),
        np.array([o.weight for o in obs]),
    )


def _fit_standard(
    data: IndexDataset, context: PredictionContext, options: FitOptions
) -> tuple[ModelParams, bool, int, list[str]]:
    groups: dict[int, RepresentationParams] = {}
    flags: list[str] = []
    converged, iterations = True, 0
    bounds = [options.amplitude_bounds, options.sigma_bounds, options.mu_bounds]
    for group in data.groups:
        directions, y, w = _group_arrays(data, group)
        offset = np.array(
            [0.0 if context.corrected else context.baseline.get((group, int(d)), np.nan) for d in directions]
        )
        if np.any(np.isnan(offset)):
            raise MissingBaselineError(f"group {group}: measured baseline indices are incomplete")
        target = y - offset
        n_group = len(y)

        def objective(x: np.ndarray) -> float:
            pred = x[0] * _gauss(directions - group - x[2], x[1])
            return nll_from_sse(sse(target - pred, w), n_group)

        best = multistart_simplex(objective, bounds, options)
        converged &= best.converged
        iterations += best.iterations
        amplitude, sigma, mu = (float(v) for v in best.x)
        if amplitude < UNIDENTIFIABLE_AMPLITUDE:
            flags.append(f"group {group}: amplitude ~0, width and offset unidentifiable")
            logger.warning(f"Standard fit, group {group}: amplitude {amplitude:.2g}; sigma and mu unidentifiable")
        groups[group] = RepresentationParams(ModelKind.STANDARD, amplitude, sigma, group, mu)
        logger.debug(f"Standard fit group {group}: A={amplitude:.4f} sigma={sigma:.2f} mu={mu:.2f}")
    return ModelParams(ModelKind.STANDARD, groups), converged, iterations, flags


def _profile_group(
    directions: np.ndarray,
    residual: np.ndarray,
    weights: np.ndarray,
    ca: np.ndarray,
    group: int,
    options: FitOptions,
) -> tuple[float, float, float]:
    """Best (A, sigma, SSE) for one group given the impedance baseline residual."""
    a_lo, a_hi = options.amplitude_bounds
    s_lo, s_hi = options.sigma_bounds
    delta = np.asarray(wrap_deg(directions - group), dtype=float)

    def solve(sigma: float) -> tuple[float, float]:
        h = np.exp(-delta**2 / (2.0 * sigma**2)) * ca
        denom = float(np.sum(weights * h * h))
        amplitude = float(np.sum(weights * h * residual) / denom) if denom > 0 else 0.0
        amplitude = min(max(amplitude, a_lo), a_hi)
        return amplitude, sse(residual - amplitude * h, weights)

    grid = np.linspace(s_lo, s_hi, 60)
    costs = [solve(s)[1] for s in grid]
    i = int(np.argmin(costs))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    refined = minimize_scalar(lambda s: solve(s)[1], bounds=(lo, hi), method="bounded")
    sigma = float(refined.x) if refined.fun <= costs[i] else float(grid[i])
    amplitude, cost = solve(sigma)
    return amplitude, sigma, cost


def _fit_impedance(
    data: IndexDataset, phase: Phase, context: PredictionContext, options: FitOptions
) -> tuple[ModelParams, bool, int, list[str]]:
    if context.response is None:
        raise ValueError("impedance fits need an impedance response")
    response = context.response
    flags: list[str] = []
    bounds = [options.scaling_bounds, options.scaling_bounds]
    n = len(data)

    if phase is Phase.BASELINE:
        directions = [o.direction for o in data.observations]
        c0, ck, cb, _ = response.arrays(directions)
        y, w = data.values, data.weights

        def objective(x: np.ndarray) -> float:
            return nll_from_sse(sse(y - (c0 + x[0] * ck + x[1] * cb), w), n)

        best = multistart_simplex(objective, bounds, options)
        scaling = ImpedanceScaling(float(best.x[0]), float(best.x[1]))
        return ModelParams(ModelKind.IMPEDANCE, {}, scaling), best.converged, best.iterations, flags

    per_group = []
    for group in data.groups:
        directions, y, w = _group_arrays(data, group)
        c0, ck, cb, ca = response.arrays([int(d) for d in directions])
        per_group.append((group, directions, y, w, c0, ck, cb, ca))

    def profile(x: np.ndarray) -> list[tuple[int, float, float, float]]:
        out = []
        for group, directions, y, w, c0, ck, cb, ca in per_group:
            residual = y - (c0 + x[0] * ck + x[1] * cb)
            amplitude, sigma, cost = _profile_group(directions, residual, w, ca, group, options)
            out.append((group, amplitude, sigma, cost))
        return out

    def objective(x: np.ndarray) -> float:
        return nll_from_sse(sum(c for *_, c in profile(x)), n)

    best = multistart_simplex(objective, bounds, options)
    groups = {}
    for group, amplitude, sigma, _ in profile(best.x):
        if amplitude < UNIDENTIFIABLE_AMPLITUDE:
            flags.append(f"group {group}: amplitude ~0, width unidentifiable")
        groups[group] = RepresentationParams(ModelKind.IMPEDANCE, amplitude, sigma, group)
    scaling = ImpedanceScaling(float(best.x[0]), float(best.x[1]))
    return ModelParams(ModelKind.IMPEDANCE, groups, scaling), best.converged, best.iterations, flags


def baseline_direction_dataset(data: IndexDataset) -> IndexDataset:
    """Baseline indices averaged across groups, one observation per direction."""
    means = data.direction_means(Phase.BASELINE)
    # group label is irrelevant for baseline impedance predictions
    return IndexDataset(tuple(Observation(d, d, Phase.BASELINE, v) for d, v in means.items()))


def fit_model(
    model: ModelKind | str,
    data: IndexDataset,
    context: PredictionContext,
    options: FitOptions | None = None,
    phase: Phase | str = Phase.TEST,
) -> FitResult:
    """Fit ``model`` to the ``phase`` observations of ``data``.

    Standard model: per-group (A, sigma, mu), reported jointly; no parameters
    in the baseline phase. Impedance model: shared (alpha_k, alpha_b) plus
    per-group (A, sigma); the baseline phase fits (alpha_k, alpha_b) alone to
    direction means with A fixed at zero. Impedance parameters are always
    searched on the response surrogate; with ``options.method == "simulate"``
    the reported predictions, NLL and criteria come from full clamp-trial
    simulations at the optimum.

    Raises:
        EmptyDatasetError: no observations for the phase
    """
    model = ModelKind(model)
    phase = Phase(phase)
    options = options or FitOptions()
    subset = data.select(phase)
    if model is ModelKind.IMPEDANCE and phase is Phase.BASELINE:
        subset = baseline_direction_dataset(data)
    if not len(subset):
        raise EmptyDatasetError(f"no {phase.value} observations to fit")
    if model is ModelKind.STANDARD and phase is not Phase.BASELINE and not context.corrected and not context.baseline:
        context = context.with_measured_baseline(data)

    logger.info(f"Fitting {model.value} model to {len(subset)} {phase.value} observations")
    if model is ModelKind.STANDARD:
        if phase is Phase.BASELINE:
            params, converged, iterations, flags = ModelParams(ModelKind.STANDARD), True, 0, []
            k = 0
        else:
            params, converged, iterations, flags = _fit_standard(subset, context, options)
            k = 3 * len(params.groups)
    else:
        params, converged, iterations, flags = _fit_impedance(subset, phase, context, options)
        k = 2 if phase is Phase.BASELINE else 2 * len(params.groups) + 2
        if options.method == "simulate":
            logger.info(f"Scoring the impedance fit by simulating {len(subset)} clamp trials")

    result = _finish(model, phase, params, subset, context, k, options, converged, iterations, flags)
    logger.info(
        f"{model.value} fit: NLL={result.nll:.3f} RMSE={result.rmse:.4f} k={result.k} n={result.n}"
    )
    return result


# =============================================================================
# Comparison
# =============================================================================


@dataclass(frozen=True)
class ParameterTable:
    rows: tuple[dict[str, float], ...]
    cv_sigma: float
    cv_amplitude: float


def parameter_table(fit: FitResult) -> ParameterTable:
    """Per-group width, amplitude and offset with their spread across groups."""
    rows = tuple(
        {
            "group": float(g),
            "amplitude": rep.amplitude,
            "sigma": rep.sigma,
            "mu": rep.mu if rep.mu is not None else 0.0,
        }
        for g, rep in sorted(fit.params.groups.items())
    )

    def cv(values: list[float]) -> float:
        mean = float(np.mean(values)) if values else 0.0
        return float(np.std(values) / mean) if mean else float("nan")

    return ParameterTable(
        rows=rows,
        cv_sigma=cv([r["sigma"] for r in rows]),
        cv_amplitude=cv([r["amplitude"] for r in rows]),
    )


def predicted_asymmetries(fit: FitResult, sign: int = 1) -> dict[int, float]:
    """+45 minus -45 entry of each group's predicted intra curve."""
    out = {}
    for group in sorted({g for g, _, ph in fit.predictions if ph is Phase.TEST}):
        plus = fit.predictions.get((group, (group + 45) % 360, Phase.TEST))
        minus = fit.predictions.get((group, (group - 45) % 360, Phase.TEST))
        if plus is not None and minus is not None:
            out[group] = sign * (plus - minus)
    return out


@dataclass(frozen=True)
class ModelRow:
    model: str
    phase: str
    nll: float
    rmse: float
    aicc: float | None
    k: int
    n: int
    delta_aicc: float


@dataclass
class ComparisonReport:
    rows: list[ModelRow]
    best: str
    parameter_tables: dict[str, ParameterTable]
    asymmetries: dict[str, dict[int, float]]

    def to_text(self) -> str:
        lines = [f"{'model':<10} {'NLL':>10} {'RMSE':>8} {'AICc':>10} {'dAICc':>8} {'k':>3} {'n':>3}"]
        for r in self.rows:
            aicc_text = f"{r.aicc:10.2f}" if r.aicc is not None else f"{'n/a':>10}"
            lines.append(
                f"{r.model:<10} {r.nll:10.3f} {r.rmse:8.4f} {aicc_text} {r.delta_aicc:8.2f} {r.k:3d} {r.n:3d}"
            )
        lines.append(f"best: {self.best}")
        for model, table in self.parameter_tables.items():
            if not table.rows:
                continue
            lines.append(f"\n{model}: CV(sigma)={table.cv_sigma:.3f} CV(A)={table.cv_amplitude:.3f}")
            for row in table.rows:
                lines.append(
                    f"  group {row['group']:5.0f}  A={row['amplitude']:.3f}  "
                    f"sigma={row['sigma']:6.2f}  mu={row['mu']:6.2f}  "
                    f"asym={self.asymmetries.get(model, {}).get(int(row['group']), float('nan')):+.3f}"
                )
        return "\n".join(lines)


def compare_models(fits: Sequence[FitResult], sign: int = 1) -> ComparisonReport:
    """Rank fits on one dataset by AICc (AIC where AICc is undefined).

    Raises:
        MismatchedDatasetError: the fits were made on different datasets
    """
    if not fits:
        raise EmptyDatasetError("no fits to compare")
    datasets = {f.dataset for f in fits}
    if len(datasets) > 1:
        raise MismatchedDatasetError(
            f"fits come from {len(datasets)} different datasets: {', '.join(sorted(datasets))}"
        )
    best_value = min(f.criterion for f in fits)
    rows = [
        ModelRow(f.model.value, f.phase.value, f.nll, f.rmse, f.aicc, f.k, f.n, f.criterion - best_value)
        for f in fits
    ]
    best = min(fits, key=lambda f: f.criterion)
    return ComparisonReport(
        rows=rows,
        best=best.model.value,
        parameter_tables={f.model.value: parameter_table(f) for f in fits},
        asymmetries={f.model.value: predicted_asymmetries(f, sign) for f in fits},
    )


# =============================================================================
# Synthetic data and recovery
# =============================================================================


def synthetic_dataset(
    model: ModelKind | str,
    params: ModelParams,
    context: PredictionContext,
    noise_sd: float,
    seed: int,
    baseline_scaling: ImpedanceScaling | None = None,
) -> IndexDataset:
    """Baseline and test group-mean indices generated by ``model`` plus Gaussian noise.

    True baselines come from the impedance response at ``baseline_scaling``
    when given, else from ``context.baseline``, else zero. Standard-model test
    indices add the true baseline to the representation (uncorrected data).
    """
    model = ModelKind(model)
    rng = np.random.default_rng(seed)
    groups = sorted(params.groups)

    def true_baseline(group: int, direction: int) -> float:
        if baseline_scaling is not None and context.response is not None:
            return context.response.index(direction, baseline_scaling.alpha_k, baseline_scaling.alpha_b)
        return float(context.baseline.get((group, direction), 0.0))

    observations = []
    for group in groups:
        for direction in DIRECTIONS:
            observations.append(
                Observation(group, direction, Phase.BASELINE, true_baseline(group, direction))
            )
    truth = PredictionContext(
        baseline={(g, d): true_baseline(g, d) for g in groups for d in DIRECTIONS},
        response=context.response,
        alpha_true=context.alpha_true,
    )
    keys = [(g, d, Phase.TEST) for g in groups for d in DIRECTIONS]
    test = predict_indices(model, params, keys, truth)
    observations += [Observation(g, d, ph, v) for (g, d, ph), v in test.items()]
    noisy = tuple(
        Observation(o.group, o.direction, o.phase, o.index + float(rng.normal(0.0, noise_sd)) if noise_sd else o.index)
        for o in observations
    )
    return IndexDataset(noisy)


@dataclass
class RecoveryRow:
    seed: int
    fits: dict[str, FitResult]
    winner: str


@dataclass
class RecoveryStudy:
    generating_model: ModelKind
    truth: ModelParams
    rows: list[RecoveryRow]

    @property
    def selection_rate(self) -> float:
        if not self.rows:
            return float("nan")
        return sum(r.winner == self.generating_model.value for r in self.rows) / len(self.rows)

    def parameter_errors(self) -> dict[str, float]:
        """Median absolute error of the generating model's own fit, pooled over groups."""
        errors: dict[str, list[float]] = {"A": [], "sigma": [], "mu": []}
        for row in self.rows:
            fit = row.fits[self.generating_model.value]
            for group, true_rep in self.truth.groups.items():
                rep = fit.params.groups[group]
                errors["A"].append(abs(rep.amplitude - true_rep.amplitude))
                errors["sigma"].append(abs(rep.sigma - true_rep.sigma))
                if true_rep.mu is not None and rep.mu is not None:
                    errors["mu"].append(abs(rep.mu - true_rep.mu))
        return {k: float(np.median(v)) for k, v in errors.items() if v}

    def to_records(self) -> list[dict[str, Any]]:
        out = []
        for row in self.rows:
            record: dict[str, Any] = {"seed": row.seed, "winner": row.winner}
            for name, fit in row.fits.items():
                record[f"{name}_aicc"] = fit.criterion
                record[f"{name}_rmse"] = fit.rmse
            gen = row.fits[self.generating_model.value]
            for group, rep in sorted(gen.params.groups.items()):
                record[f"A_{group}"] = rep.amplitude
                record[f"sigma_{group}"] = rep.sigma
                if rep.mu is not None:
                    record[f"mu_{group}"] = rep.mu
            out.append(record)
        return out


def recovery_study(
    model: ModelKind | str,
    params: ModelParams,
    context: PredictionContext,
    noise_sd: float,
    seeds: Sequence[int],
    options: FitOptions | None = None,
    baseline_scaling: ImpedanceScaling | None = None,
    candidates: Sequence[ModelKind] = (ModelKind.STANDARD, ModelKind.IMPEDANCE),
) -> RecoveryStudy:
    """Generate one dataset per seed, fit every candidate model, record the AICc winner."""
    model = ModelKind(model)
    options = options or FitOptions()
    rows = []
    for seed in seeds:
        data = synthetic_dataset(model, params, context, noise_sd, seed, baseline_scaling)
        fit_context = PredictionContext(
            baseline=data.baseline_table(),
            response=context.response,
            template=context.template,
            alpha_true=context.alpha_true,
        )
        fits = {
            cand.value: fit_model(cand, data, fit_context, options, Phase.TEST)
            for cand in candidates
        }
        winner = min(fits.values(), key=lambda f: f.criterion).model.value
        rows.append(RecoveryRow(seed, fits, winner))
        logger.info(f"Recovery seed {seed}: {winner} wins")
    return RecoveryStudy(model, params, rows)
