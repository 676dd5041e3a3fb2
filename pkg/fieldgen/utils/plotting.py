"""SVG figures: generalization curves, asymmetries, representations, baselines, learning and stiffness.

Presentation only: nothing here feeds back into computation.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from fieldgen.core.analysis import OFFSETS, CurveSet, GeneralizationCurve, asymmetry  # noqa: E402
from fieldgen.core.exceptions import EmptyDatasetError  # noqa: E402
from fieldgen.core.fitting import FitResult  # noqa: E402
from fieldgen.core.protocol import DIRECTIONS  # noqa: E402
from fieldgen.core.trial import HandImpedance  # noqa: E402

logger = logging.getLogger("fieldgen")

# fixed ids and no timestamp so identical inputs give identical bytes
plt.rcParams["svg.hashsalt"] = "fieldgen"
plt.rcParams["svg.fonttype"] = "none"
SVG_METADATA = {"Date": None, "Creator": "fieldgen"}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    logger.debug(f"Wrote {path}")
    return path


def curve_panel(curve: GeneralizationCurve, path: Path, prediction: Sequence[float] | None = None) -> Path:
    """Mean ± SEM at each offset, closed at ±180, with an optional model overlay."""
    offsets, means = curve.closed()
    sems = np.concatenate([[curve.point(180).sem], curve.sems])
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.errorbar(offsets, means, yerr=sems, fmt="o-", color="k", capsize=2, label="data")
    if prediction is not None:
        pred = np.append(prediction[-1], prediction)
        ax.plot(offsets, pred, "-", color="tab:red", label="model")
        ax.legend(frameon=False, fontsize=8)
    ax.axhline(0.0, color="0.7", lw=0.8)
    ax.set_xticks([-180, -90, 0, 90, 180])
    ax.set_xlabel("offset (deg)")
    ax.set_ylabel("adaptation index")
    label = "train" if curve.kind == "intra" else "test"
    ax.set_title(f"{curve.kind} {label} {curve.anchor} deg", fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def asymmetry_panel(asymmetries: Mapping[tuple[str, int], float], path: Path) -> Path:
    keys = sorted(asymmetries)
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(np.arange(len(keys)), [asymmetries[k] for k in keys], color="0.4")
    ax.set_xticks(np.arange(len(keys)))
    ax.set_xticklabels([f"{kind[0].upper()}{anchor}" for kind, anchor in keys], rotation=90, fontsize=7)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_ylabel("asymmetry (+45 minus -45)")
    fig.tight_layout()
    return _save(fig, path)


def representation_panel(fit: FitResult, path: Path) -> Path:
    """Polar plot of every group's learned fraction of the field."""
    theta = np.arange(0, 361, 2, dtype=float)
    fig = plt.figure(figsize=(4, 4))
    ax = fig.add_subplot(projection="polar")
    for group, rep in sorted(fit.params.groups.items()):
        ax.plot(np.radians(theta), rep.fraction(theta), lw=1, label=str(group))
    ax.set_title(f"{fit.model.value} representation", fontsize=9)
    ax.legend(fontsize=6, loc="upper right", bbox_to_anchor=(1.25, 1.1), frameon=False)
    return _save(fig, path)


def baseline_panel(baseline: Mapping[int, float], path: Path) -> Path:
    directions = [d for d in DIRECTIONS if d in baseline]
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(directions, [baseline[d] for d in directions], width=30, color="0.5")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xticks(list(DIRECTIONS))
    ax.set_xlabel("direction (deg)")
    ax.set_ylabel("baseline index")
    fig.tight_layout()
    return _save(fig, path)


def learning_panel(series: Mapping[int, Sequence[tuple[int, float]]], path: Path) -> Path:
    """Training-direction clamp index against trial number, one line per group."""
    fig, ax = plt.subplots(figsize=(5, 3))
    for group, points in sorted(series.items()):
        if points:
            trials, values = zip(*points)
            ax.plot(trials, values, ".-", lw=0.8, ms=3, label=str(group))
    ax.axhline(0.0, color="0.7", lw=0.8)
    ax.set_xlabel("trial")
    ax.set_ylabel("adaptation index")
    ax.legend(fontsize=6, frameon=False, ncol=4)
    fig.tight_layout()
    return _save(fig, path)


def stiffness_panel(
    profile: Sequence[HandImpedance], path: Path, peak_errors_mm: Mapping[int, float] | None = None
) -> Path:
    """Hand stiffness ellipses at mid-reach, labelled with the baseline peak error."""
    fig, ax = plt.subplots(figsize=(4, 4))
    largest = max(float(np.max(np.linalg.eigvalsh(h.stiffness))) for h in profile)
    scale = 0.03 / largest  # m per N/m
    angle = np.linspace(0.0, 2.0 * np.pi, 73)
    circle = np.stack([np.cos(angle), np.sin(angle)])
    for h in profile:
        ellipse = h.point[:, None] + scale * (h.stiffness @ circle)
        ax.plot(ellipse[0] * 100, ellipse[1] * 100, color="k", lw=0.8)
        if peak_errors_mm and h.direction in peak_errors_mm:
            ax.annotate(
                f"{peak_errors_mm[h.direction]:.1f} mm",
                xy=(h.point[0] * 100, h.point[1] * 100),
                ha="center",
                va="center",
                fontsize=6,
                color="tab:red",
            )
    ax.set_aspect("equal")
    ax.set_xlabel("x (cm)")
    ax.set_ylabel("y (cm)")
    ax.set_title("hand stiffness at mid-reach", fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def _predicted_curve(fit: FitResult, curve: GeneralizationCurve) -> list[float] | None:
    if curve.kind != "intra":
        return None
    values = []
    for offset in OFFSETS:
        key = (curve.anchor, (curve.anchor + offset) % 360, fit.phase)
        if key not in fit.predictions:
            return None
        values.append(fit.predictions[key])
    return values


def emit_plots(
    out_dir: Path,
    curves: CurveSet | None = None,
    fits: Sequence[FitResult] = (),
    baseline: Mapping[int, float] | None = None,
    sign: int = 1,
    learning: Mapping[int, Sequence[tuple[int, float]]] | None = None,
    impedance: Sequence[HandImpedance] = (),
    peak_errors_mm: Mapping[int, float] | None = None,
) -> list[Path]:
    """Write every figure the inputs support and return the paths in writing order.

    Raises:
        EmptyDatasetError: nothing to plot
    """
    out_dir = Path(out_dir)
    curves = curves or CurveSet()
    if not curves.intra and not curves.inter and not fits and not baseline and not impedance:
        raise EmptyDatasetError("nothing to plot")

    written: list[Path] = []
    overlay = fits[0] if len(fits) == 1 else None
    for curve in sorted(curves.intra + curves.inter, key=lambda c: (c.kind, c.anchor)):
        prediction = _predicted_curve(overlay, curve) if overlay else None
        written.append(curve_panel(curve, out_dir / f"curve_{curve.kind}_{curve.anchor:03d}.svg", prediction))
    if curves.intra or curves.inter:
        asym = {(c.kind, c.anchor): asymmetry(c, sign) for c in curves.intra + curves.inter}
        written.append(asymmetry_panel(asym, out_dir / "asymmetry.svg"))
    for fit in fits:
        if fit.params.groups:
            written.append(representation_panel(fit, out_dir / f"representation_{fit.model.value}.svg"))
    if baseline:
        written.append(baseline_panel(baseline, out_dir / "baseline_index.svg"))
    if learning and any(learning.values()):
        written.append(learning_panel(learning, out_dir / "learning_curve.svg"))
    if impedance:
        written.append(stiffness_panel(impedance, out_dir / "hand_stiffness.svg", peak_errors_mm))
    logger.info(f"Wrote {len(written)} figure(s) to {out_dir}")
    return written
