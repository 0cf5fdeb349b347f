"""Matplotlib figures written next to the CSV plot data."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import AthleteTest  # noqa: E402
from .dmax import dmax_for_test  # noqa: E402
from .errors import LactateLabError  # noqa: E402
from .heuristic import ACCEPTABLE_ERROR_TABLE  # noqa: E402

DPI = 120


def _band(ax, pace_lo, pace_hi):
    """Shade +/- the acceptable error over a pace range (min/km)."""
    edges = [r.pace_threshold for r in ACCEPTABLE_ERROR_TABLE] + [max(pace_hi, 5.0) + 0.5]
    for row, hi in zip(ACCEPTABLE_ERROR_TABLE, edges[1:]):
        lo = row.pace_threshold
        if hi < pace_lo or lo > pace_hi:
            continue
        ax.fill_between(
            [lo, hi], -row.max_error_s_per_km, row.max_error_s_per_km, color="tab:green", alpha=0.15, lw=0
        )
        ax.hlines([-row.max_error_s_per_km, row.max_error_s_per_km], lo, hi, colors="tab:green", lw=1)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_lactate_curves(tests: Sequence[AthleteTest], path, degree: int = 3) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for t in tests:
        (line,) = ax.plot(t.speeds, t.concentrations, "o", ms=3)
        try:
            curve, est = dmax_for_test(t, degree)
        except LactateLabError:
            continue
        s = np.linspace(t.speeds[0], t.speeds[-1], 200)
        ax.plot(s, curve(s), "-", lw=0.8, color=line.get_color())
        ax.plot([est.lt_speed], [est.lt_lactate], "x", color="k", ms=5)
    ax.set_xlabel("Speed (km/h)")
    ax.set_ylabel("Blood lactate (mmol/L)")
    ax.set_title("Lactate curves and Dmax LT")
    return _save(fig, path)


def plot_error_distribution(report, path) -> Path:
    es = report.error_samples
    fig, ax = plt.subplots(figsize=(6, 4))
    for n_points, g in report.per_point_count.items():
        err = es.error_percent[es.n_points == n_points]
        ax.hist(err, bins=60, histtype="step", label=f"{n_points} points (SD {g.sem:.1f})")
    ax.set_xlabel("Dmax LT error (% of speed reserve)")
    ax.set_ylabel("Plausible curves")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_precision_residuals(report, path) -> Path:
    """Plausible Dmax LT residuals against the acceptable-error band."""
    es = report.error_samples
    fig, ax = plt.subplots(figsize=(6, 4))
    ref_pace = 60.0 / es.reference_lt
    signed = (60.0 / es.lt_speed - ref_pace) * 60.0
    ok = es.within
    if len(es):
        _band(ax, float(ref_pace.min()), float(ref_pace.max()))
    ax.plot(ref_pace[ok], signed[ok], ".", ms=1, color="tab:blue", alpha=0.3, label="within")
    ax.plot(ref_pace[~ok], signed[~ok], ".", ms=1, color="tab:red", alpha=0.5, label="outside")
    if report.ceiling_accuracy is not None:
        ax.set_title(f"Ceiling accuracy {report.ceiling_accuracy:.1f}%")
    ax.set_xlabel("Pace at LT (min/km)")
    ax.set_ylabel("Residual (s/km)")
    ax.legend(fontsize=8, markerscale=8)
    return _save(fig, path)


def plot_population_residuals(report, path) -> Path:
    """Heuristic residuals per athlete against the acceptable-error band."""
    recs = report.residuals
    pace = np.array([60.0 / r.reference_lt for r in recs])
    res = np.array([r.residual for r in recs])
    ok = np.array([r.within for r in recs], dtype=bool)
    fig, ax = plt.subplots(figsize=(6, 4))
    _band(ax, float(pace.min()), float(pace.max()))
    ax.plot(pace[ok], res[ok], "o", ms=4, color="tab:blue", label="within")
    ax.plot(pace[~ok], res[~ok], "o", ms=4, color="tab:red", label="outside")
    title = f"System accuracy {report.system_accuracy:.1f}%"
    if report.ceiling_accuracy is not None:
        title += f", ceiling {report.ceiling_accuracy:.1f}%"
    ax.set_title(title)
    ax.set_xlabel("Dmax pace at LT (min/km)")
    ax.set_ylabel("Heuristic residual (s/km)")
    ax.legend(fontsize=8)
    return _save(fig, path)
