"""Unified tool handlers shared between the command line and the MCP server.

Each handler takes the tool arguments and a config provider, runs the
blocking work in a worker thread and returns a ToolResult.
"""

import asyncio
import json
import logging
import math
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from fieldgen.config import ExperimentConfig, settings
from fieldgen.core.analysis import (
    AdaptationIndex,
    analyze_records,
    adaptation_index,
    asymmetry,
    baseline_correlation,
    baseline_indices,
    build_curves,
    early_pe,
    learning_curve,
    pe_series,
    perpendicular_error,
)
from fieldgen.core.controllers import ModelKind
from fieldgen.core.exceptions import (
    ConfigError,
    DataError,
    DataFormatError,
    EmptyDatasetError,
    FieldgenError,
    IntegrationDivergenceError,
    InvalidDirectionError,
    MismatchedDatasetError,
    MissingDataError,
    NumericalError,
    ProtocolError,
    TooShortSeriesError,
    UnreachableTargetError,
)
from fieldgen.core.fitting import (
    FitResult,
    ImpedanceResponse,
    IndexDataset,
    ModelParams,
    PredictionContext,
    compare_models,
    fit_model,
    recovery_study,
)
from fieldgen.core.protocol import DIRECTIONS, Phase, TrialKind, audit_protocol, build_protocol
from fieldgen.core.trial import (
    TrialTemplate,
    halve_step_check,
    hand_impedance_profile,
    protocol_trial_specs,
    simulate_trial,
)
from fieldgen.utils import records
from fieldgen.utils.plotting import emit_plots
from fieldgen.utils.workers import mapper, parallel_map

from .base import ConfigProvider, ToolResult

logger = logging.getLogger("fieldgen")

PHASES = {"baseline": Phase.BASELINE, "post": Phase.TEST, "test": Phase.TEST}


def _handle_error(e: Exception, operation: str) -> ToolResult:
    """Convert exception to ToolResult with appropriate error code."""
    if isinstance(e, ConfigError):
        return ToolResult(success=False, error="config_error", message=str(e))
    elif isinstance(e, (InvalidDirectionError, UnreachableTargetError)):
        return ToolResult(success=False, error="invalid_input", message=str(e))
    elif isinstance(e, ProtocolError):
        return ToolResult(success=False, error="protocol_error", message=str(e))
    elif isinstance(e, MissingDataError):
        return ToolResult(success=False, error="missing_data", message=str(e))
    elif isinstance(e, (DataFormatError, TooShortSeriesError)):
        return ToolResult(success=False, error="data_format", message=str(e))
    elif isinstance(e, EmptyDatasetError):
        return ToolResult(success=False, error="empty_dataset", message=str(e))
    elif isinstance(e, MismatchedDatasetError):
        return ToolResult(success=False, error="mismatched_dataset", message=str(e))
    elif isinstance(e, DataError):
        return ToolResult(success=False, error="data_error", message=str(e))
    elif isinstance(e, IntegrationDivergenceError):
        return ToolResult(success=False, error="divergence", message=str(e))
    elif isinstance(e, NumericalError):
        return ToolResult(success=False, error="numerical_error", message=str(e))
    elif isinstance(e, FileNotFoundError):
        return ToolResult(success=False, error="not_found", message=f"File not found: {e.filename}")
    elif isinstance(e, FieldgenError):
        return ToolResult(success=False, error="fieldgen_error", message=str(e))
    else:
        logger.error(f"Unexpected error in {operation}: {e}")
        return ToolResult(
            success=False,
            error="unexpected_error",
            message=f"Failed to {operation}: {str(e)}",
        )


def _out_dir(args: Dict[str, Any], config: ExperimentConfig) -> Path:
    out = Path(args["out"]) if args.get("out") else config.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _groups(args: Dict[str, Any]) -> List[int]:
    group = args.get("group")
    return list(DIRECTIONS) if group is None else [int(group) % 360]


def _jobs(args: Dict[str, Any]) -> int:
    return int(args.get("jobs") or settings.jobs)


def _phase(args: Dict[str, Any]) -> Phase:
    name = str(args.get("phase", "post"))
    if name not in PHASES:
        raise ConfigError(f"unknown phase '{name}' (expected baseline or post)")
    return PHASES[name]


def _template(
    args: Dict[str, Any], config: ExperimentConfig, model: Optional[ModelKind] = None
) -> TrialTemplate:
    """Trial template with imported baselines when the impedance model runs on measured paths."""
    template = config.to_template(model)
    source = args.get("baselines") or config.baselines_file
    if source and template.model is ModelKind.IMPEDANCE:
        logger.info(f"Importing baseline paths from {source}")
        baselines = records.import_baselines(Path(source), template.arm, rate=template.log_rate)
        template = replace(template, baselines=baselines)
    return template


def _impedance_response(
    args: Dict[str, Any], config: ExperimentConfig, jobs: int, out: Path
) -> ImpedanceResponse:
    """Load the basis-simulation response from ``args['response']`` or build and save it."""
    cached = args.get("response")
    path = Path(cached) if cached else out / "impedance_response.json"
    if path.exists():
        try:
            return ImpedanceResponse.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (KeyError, ValueError) as e:
            raise DataFormatError(f"{path}: {e}") from e
    response = ImpedanceResponse.build(
        _template(args, config, ModelKind.IMPEDANCE), DIRECTIONS, mapper(jobs)
    )
    path.write_text(json.dumps(response.to_dict(), indent=2) + "\n", encoding="utf-8")
    return response


# =============================================================================
# Simulation
# =============================================================================


def _export_baselines(template: TrialTemplate, path: Path) -> Path:
    assert template.baselines is not None
    times = np.arange(int(round(template.movement_time * template.log_rate)) + 1) / template.log_rate
    plans = {d: template.baselines.plan_for(template.arm, d, times) for d in DIRECTIONS}
    return records.export_baselines(plans, path)


def _step_check(group: int, specs, alpha: float) -> Dict[str, Any]:
    """Re-run the first training-direction clamp at half the step."""
    spec = next(s for s in specs if s.kind is TrialKind.TRAIN_CLAMP)
    report = halve_step_check(spec)
    index_diff = abs(
        adaptation_index(report.coarse, alpha).value - adaptation_index(report.fine, alpha).value
    )
    check = {
        "group": group,
        "trial": spec.index,
        "step": report.step,
        "max_position_diff": report.max_position_diff,
        "max_force_diff": report.max_force_diff,
        "index_diff": index_diff,
    }
    if index_diff >= 0.005 or report.max_position_diff >= 1e-6:
        logger.warning(f"Step {report.step} s may be too coarse for group {group}: {check}")
    return check


def _simulate(args: Dict[str, Any], config: ExperimentConfig) -> Dict[str, Any]:
    out = _out_dir(args, config)
    jobs = _jobs(args)
    template = _template(args, config)
    baseline_scaling, post_scaling = config.scalings()
    written: List[Path] = []
    summary = []
    checks = []
    seeds: Dict[str, int] = {}
    if template.baselines is not None:
        written.append(_export_baselines(template, out / "baselines.csv"))
    for group in _groups(args):
        seed = int(args["seed"]) if args.get("seed") is not None else config.seed_for(group)
        seeds[str(group)] = seed
        protocol = build_protocol(group, seed)
        report = audit_protocol(protocol)
        if not report.ok:
            raise DataFormatError(f"group {group}: schedule failed audit: {report.violations[0]}")
        specs = protocol_trial_specs(
            protocol,
            template,
            config.simulation.representation(group),
            baseline_scaling,
            post_scaling,
        )
        logger.info(f"Simulating {len(specs)} trials for group {group} deg (seed {seed})")
        trials = parallel_map(simulate_trial, specs, jobs)

        group_dir = out / f"group_{group:03d}"
        written.append(records.write_schedule_csv(protocol, group_dir / "schedule.csv"))
        if config.simulation.concatenate:
            written.append(records.write_trials_csv(trials, group_dir / "trials.csv"))
        else:
            for record in trials:
                path = group_dir / "trials" / f"trial_{record.condition.index:04d}.csv"
                written.append(records.write_trial_csv(record, path))
        summary.append({"group": group, "seed": seed, "trials": len(trials)})
        if args.get("check_step"):
            checks.append(_step_check(group, specs, config.field.signed_alpha))

    manifest = records.write_manifest(
        out, written, {"config": config.model_dump(mode="json")}, {"protocol": seeds}
    )
    data: Dict[str, Any] = {
        "out": str(out),
        "groups": summary,
        "trials": sum(s["trials"] for s in summary),
        "files": len(written),
        "manifest": str(manifest),
    }
    if checks:
        data["step_checks"] = checks
    return data


async def simulate(args: Dict[str, Any], config_provider: ConfigProvider) -> ToolResult:
    """Simulate the full protocol for one group or all eight."""
    try:
        config = config_provider.get_config()
        data = await asyncio.to_thread(_simulate, args, config)
        return ToolResult(
            success=True,
            data=data,
            message=f"Simulated {data['trials']} trials in {len(data['groups'])} group(s)",
        )
    except Exception as e:
        return _handle_error(e, "simulate protocol")


def _audit(args: Dict[str, Any], config: ExperimentConfig) -> Dict[str, Any]:
    reports = []
    for group in _groups(args):
        seed = int(args["seed"]) if args.get("seed") is not None else config.seed_for(group)
        report = audit_protocol(build_protocol(group, seed))
        reports.append(
            {
                "group": report.group,
                "seed": report.seed,
                "trials": report.n_trials,
                "violations": report.violations,
            }
        )
    return {"reports": reports, "violations": sum(len(r["violations"]) for r in reports)}


async def audit(args: Dict[str, Any], config_provider: ConfigProvider) -> ToolResult:
    """Build schedules and check their composition and ordering."""
    try:
        config = config_provider.get_config()
        data = await asyncio.to_thread(_audit, args, config)
        if data["violations"]:
            return ToolResult(
                success=False,
                data=data,
                error="audit_failed",
                message=f"Protocol audit found {data['violations']} violation(s)",
            )
        return ToolResult(success=True, data=data, message="Protocol audit passed")
    except Exception as e:
        return _handle_error(e, "audit protocol")


# =============================================================================
# Analysis
# =============================================================================


def _trial_files(inputs: List[str]) -> List[Path]:
    files: List[Path] = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            files += sorted(path.rglob("trial_*.csv")) + sorted(path.rglob("trials.csv"))
        elif path.exists():
            files.append(path)
        else:
            raise FileNotFoundError(2, "No such file or directory", str(path))
    if not files:
        raise EmptyDatasetError(f"no trial files under {', '.join(inputs)}")
    return files


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.write_text(records.dumps_frame(frame), encoding="utf-8")
    return path


def _baseline_correlation(trials, indices: List[AdaptationIndex]) -> Optional[float]:
    """Across directions, baseline PE against baseline index; None when undefined."""
    pe: Dict[int, list] = {}
    for record in trials:
        if record.condition.phase is Phase.BASELINE and not record.condition.is_clamp:
            pe.setdefault(int(round(record.condition.direction)) % 360, []).append(
                perpendicular_error(record)
            )
    try:
        value = baseline_correlation({d: float(np.mean(v)) for d, v in pe.items()}, baseline_indices(indices))
    except EmptyDatasetError:
        return None
    return value if math.isfinite(value) else None


def _analyze(args: Dict[str, Any], config: ExperimentConfig) -> Dict[str, Any]:
    out = _out_dir(args, config)
    phase = _phase(args)
    inputs = args.get("inputs") or [str(config.resolved_output_dir())]
    trials = records.load_trials(_trial_files(list(inputs)))
    alpha = config.field.signed_alpha
    indices = analyze_records(trials, alpha)
    if not indices:
        raise EmptyDatasetError("no clamp trials to analyze")

    written = [records.write_indices_csv(indices, out / "indices.csv")]
    by_group: Dict[Optional[int], list] = {}
    for record in trials:
        by_group.setdefault(record.condition.group, []).append(record)
    ordered = sorted(by_group.items(), key=lambda item: (item[0] is None, item[0] or 0))
    pe = pd.DataFrame(
        [(group, trial, value) for group, recs in ordered for trial, value in pe_series(recs)],
        columns=["group_deg", "trial", "pe_mm"],
    )
    written.append(_write_frame(pe, out / "pe.csv"))
    groups = sorted({int(i.group) for i in indices if i.group is not None})
    learning = pd.DataFrame(
        [(group, trial, value) for group in groups for trial, value in learning_curve(indices, group)],
        columns=["group_deg", "trial", "index"],
    )
    written.append(_write_frame(learning, out / "learning_curve.csv"))
    early = {}
    for group, recs in ordered:
        try:
            early[group] = early_pe(recs)
        except EmptyDatasetError:
            continue

    baseline = baseline_indices(indices, by_group=True)
    curves = build_curves(indices, phase)
    corrected = build_curves(indices, phase, baseline) if phase is Phase.TEST and baseline else None
    rows = []
    for label, curve_set in (("raw", curves), ("corrected", corrected)):
        if curve_set is None:
            continue
        for curve in curve_set.intra + curve_set.inter:
            written.append(records.write_curve_csv(curve, out / "curves" / records.curve_filename(curve)))
            rows.append((curve.kind, curve.anchor, label, asymmetry(curve, int(args.get("sign", 1)))))
    asym = pd.DataFrame(rows, columns=["kind", "anchor_deg", "curve", "asymmetry"])
    written.append(_write_frame(asym, out / "asymmetries.csv"))

    manifest = records.write_manifest(
        out, written, {"trials": [str(p) for p in inputs], "phase": phase.value}, {}
    )
    peaks = {c.anchor: c.mean(0) for c in curves.intra}
    return {
        "out": str(out),
        "trials": len(trials),
        "indices": len(indices),
        "intra_peaks": peaks,
        "early_pe": early,
        "baseline_correlation": _baseline_correlation(trials, indices),
        "asymmetries": [
            {"kind": k, "anchor": a, "curve": c, "asymmetry": v} for k, a, c, v in rows
        ],
        "manifest": str(manifest),
    }


async def analyze(args: Dict[str, Any], config_provider: ConfigProvider) -> ToolResult:
    """Adaptation indices, generalization curves and asymmetries from trial CSVs."""
    try:
        config = config_provider.get_config()
        data = await asyncio.to_thread(_analyze, args, config)
        return ToolResult(
            success=True,
            data=data,
            message=f"Analyzed {data['trials']} trials into {data['indices']} indices",
        )
    except Exception as e:
        return _handle_error(e, "analyze trials")


# =============================================================================
# Modeling
# =============================================================================


def _load_indices(args: Dict[str, Any], config: ExperimentConfig) -> List[AdaptationIndex]:
    path = Path(args.get("indices") or config.resolved_output_dir() / "indices.csv")
    return records.read_indices_csv(path)


def _fit(args: Dict[str, Any], config: ExperimentConfig) -> Dict[str, Any]:
    out = _out_dir(args, config)
    model = ModelKind(args.get("model", config.simulation.model.value))
    phase = _phase(args)
    data = IndexDataset.from_indices(_load_indices(args, config))
    response = None
    if model is ModelKind.IMPEDANCE:
        response = _impedance_response(args, config, _jobs(args), out)
    context = PredictionContext(
        baseline=data.baseline_table(),
        response=response,
        template=_template(args, config, ModelKind.IMPEDANCE) if model is ModelKind.IMPEDANCE else None,
        alpha_true=config.field.signed_alpha,
    )
    fit = fit_model(model, data, context, config.fitting.to_options(), phase)
    path = records.write_fit_json(fit, out / f"fit_{model.value}_{phase.value}.json")
    summary = {k: v for k, v in fit.to_dict().items() if k != "predictions"}
    return {"path": str(path), "fit": summary}


async def fit(args: Dict[str, Any], config_provider: ConfigProvider) -> ToolResult:
    """Fit one model to an index dataset and save the FitResult."""
    try:
        config = config_provider.get_config()
        data = await asyncio.to_thread(_fit, args, config)
        result = data["fit"]
        return ToolResult(
            success=True,
            data=data,
            message=f"{result['model']} fit: NLL={result['nll']:.3f}, k={result['k']}, n={result['n']}",
        )
    except Exception as e:
        return _handle_error(e, "fit model")


def _compare(args: Dict[str, Any], config: ExperimentConfig) -> Dict[str, Any]:
    paths = args.get("fits") or []
    if not paths:
        raise EmptyDatasetError("no fit results given")
    fits: List[FitResult] = [records.read_fit_json(Path(p)) for p in paths]
    report = compare_models(fits, int(args.get("sign", 1)))
    text = report.to_text()
    data: Dict[str, Any] = {
        "best": report.best,
        "rows": [asdict(r) for r in report.rows],
        "report": text,
    }
    if args.get("out"):
        path = _out_dir(args, config) / "comparison.txt"
        path.write_text(text + "\n", encoding="utf-8")
        data["path"] = str(path)
    return data


async def compare(args: Dict[str, Any], config_provider: ConfigProvider) -> ToolResult:
    """Rank fits of the same dataset by AICc."""
    try:
        config = config_provider.get_config()
        data = await asyncio.to_thread(_compare, args, config)
        return ToolResult(success=True, data=data, message=f"Best model: {data['best']}")
    except Exception as e:
        return _handle_error(e, "compare models")


def _recover(args: Dict[str, Any], config: ExperimentConfig) -> Dict[str, Any]:
    out = _out_dir(args, config)
    model = ModelKind(args.get("model", config.simulation.model.value))
    jobs = _jobs(args)
    n_seeds = int(args.get("seeds") or config.fitting.recovery_seeds)
    noise_sd = float(args["noise_sd"]) if args.get("noise_sd") is not None else config.fitting.noise_sd
    baseline_scaling, post_scaling = config.scalings()
    truth_sim = config.simulation.model_copy(update={"model": model})
    truth = ModelParams(
        model,
        {g: truth_sim.representation(g) for g in DIRECTIONS},
        post_scaling if model is ModelKind.IMPEDANCE else None,
    )
    context = PredictionContext(
        response=_impedance_response(args, config, jobs, out),
        alpha_true=config.field.signed_alpha,
    )
    seeds = list(range(config.noise_seed, config.noise_seed + n_seeds))
    study = recovery_study(
        model,
        truth,
        context,
        noise_sd,
        seeds,
        config.fitting.to_options(),
        baseline_scaling=baseline_scaling,
    )
    table = pd.DataFrame(study.to_records())
    path = out / f"recovery_{model.value}.csv"
    path.write_text(records.dumps_frame(table), encoding="utf-8")
    manifest = records.write_manifest(
        out, [path], {"model": model.value, "noise_sd": noise_sd}, {"noise": seeds}
    )
    return {
        "path": str(path),
        "selection_rate": study.selection_rate,
        "parameter_errors": study.parameter_errors(),
        "seeds": len(seeds),
        "manifest": str(manifest),
    }


async def recover(args: Dict[str, Any], config_provider: ConfigProvider) -> ToolResult:
    """Parameter- and model-recovery study on synthetic index data."""
    try:
        config = config_provider.get_config()
        data = await asyncio.to_thread(_recover, args, config)
        return ToolResult(
            success=True,
            data=data,
            message=f"Recovered generating model in {data['selection_rate']:.0%} of {data['seeds']} datasets",
        )
    except Exception as e:
        return _handle_error(e, "run recovery study")


# =============================================================================
# Plots
# =============================================================================


def _plot(args: Dict[str, Any], config: ExperimentConfig) -> Dict[str, Any]:
    out = _out_dir(args, config)
    indices = _load_indices(args, config)
    phase = _phase(args)
    fits = [records.read_fit_json(Path(p)) for p in args.get("fits") or []]
    curves = build_curves(indices, phase)
    baseline = baseline_indices(indices)
    groups = sorted({int(i.group) for i in indices if i.group is not None})
    profile = hand_impedance_profile(config.to_template(), config.scalings()[0])
    paths = emit_plots(
        out / "figures",
        curves,
        fits,
        baseline,
        int(args.get("sign", 1)),
        learning={g: learning_curve(indices, g) for g in groups},
        impedance=profile,
        peak_errors_mm=config.baseline_pe_mm,
    )
    return {
        "figures": [str(p) for p in paths],
        "lateral_stiffness": {h.direction: h.lateral_stiffness for h in profile},
    }


async def plot(args: Dict[str, Any], config_provider: ConfigProvider) -> ToolResult:
    """SVG figures from an index CSV and optional fits."""
    try:
        config = config_provider.get_config()
        data = await asyncio.to_thread(_plot, args, config)
        return ToolResult(success=True, data=data, message=f"Wrote {len(data['figures'])} figure(s)")
    except Exception as e:
        return _handle_error(e, "emit plots")
