"""Population statistics: BCa intervals, system accuracy and acceptance."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm

from .core import AthleteTest, speed_to_pace
from .dmax import dmax_for_test, flag_outliers
from .errors import DomainError, FitError, NoDmaxPointError
from .heuristic import (
    DEFAULT_FRACTION,
    acceptable_error_for,
    heuristic_lt,
    speed_reserve,
    transform_lt,
)
from .precision import PrecisionConfig, PrecisionReport, dmax_precision

DEFAULT_BCA_RESAMPLES = 10_000
SYSTEM_ACCEPTABLE_RATE = 95.0


def bootstrap_means(samples: np.ndarray, n_resamples: int, seed) -> np.ndarray:
    """Means of ``n_resamples`` resamples drawn with
    ``default_rng(seed).integers(0, n, (n_resamples, n))``.

    Sums are exactly rounded, so a resample that permutes the sample has
    exactly the sample mean.
    """
    x = np.asarray(samples, dtype=float)
    n = len(x)
    idx = np.random.default_rng(seed).integers(0, n, (n_resamples, n))
    return np.fromiter((math.fsum(row) for row in x[idx].tolist()), float, n_resamples) / n


def bca_ci(
    samples: Sequence[float],
    n_resamples: int = DEFAULT_BCA_RESAMPLES,
    confidence: float = 0.95,
    seed=None,
    method: str = "bca",
) -> tuple[float, float]:
    """Bootstrap confidence interval for the mean.

    ``method="bca"`` gives the bias-corrected and accelerated interval: the
    bias correction comes from the share of bootstrap means below the
    sample mean, the acceleration from leave-one-out jackknife means.  With
    zero jackknife variance the plain percentile interval is returned.
    ``method="percentile"`` always returns the percentile interval.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < 3:
        raise DomainError("need at least 3 samples")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    if not 0 < confidence < 1:
        raise DomainError("confidence must lie in (0, 1)")
    if n_resamples < 1:
        raise DomainError("n_resamples must be >= 1")
    if method not in ("bca", "percentile"):
        raise DomainError(f"unknown method {method!r}")

    boot = bootstrap_means(x, n_resamples, seed)
    alpha = (1.0 - confidence) / 2.0
    levels = np.array([alpha, 1.0 - alpha])
    if method == "percentile":
        return _quantiles(boot, levels)

    n = len(x)
    jack = (x.sum() - x) / (n - 1)
    d = jack.mean() - jack
    ss = float(np.sum(d * d))
    if ss == 0.0:
        warnings.warn("zero jackknife variance; using the percentile interval", stacklevel=2)
        return _quantiles(boot, levels)
    accel = float(np.sum(d**3)) / (6.0 * ss**1.5)

    below = float(np.mean(boot < math.fsum(x) / n))
    below = min(max(below, 0.5 / n_resamples), 1.0 - 0.5 / n_resamples)
    z0 = norm.ppf(below)
    z = norm.ppf(levels)
    adjusted = norm.cdf(z0 + (z0 + z) / (1.0 - accel * (z0 + z)))
    return _quantiles(boot, adjusted)


def format_mean_ci(mean: float, ci: tuple[float, float]) -> str:
    """``59.6% (58.3 - 60.7)`` style summary."""
    return f"{mean:.1f}% ({ci[0]:.1f} - {ci[1]:.1f})"


def _quantiles(boot, levels):
    lo, hi = np.quantile(boot, levels)
    return float(lo), float(hi)


@dataclass(frozen=True)
class ResidualRecord:
    athlete_id: str
    reference_lt: float
    estimated_lt: float
    residual: float  # signed, s/km; positive means the estimate is slower
    acceptable_limit: float
    within: bool


def residual_record(
    athlete_id: str, estimated_lt: float, reference_lt: float, bucket_by: str = "reference"
) -> ResidualRecord:
    est = speed_to_pace(estimated_lt).value
    ref = speed_to_pace(reference_lt).value
    residual = (est - ref) * 60.0
    limit = acceptable_error_for(ref if bucket_by == "reference" else est).max_error_s_per_km
    return ResidualRecord(athlete_id, reference_lt, estimated_lt, residual, limit, abs(residual) <= limit + 1e-9)


def system_accuracy(residuals: Iterable[ResidualRecord]) -> float:
    records = list(residuals)
    if not records:
        raise DomainError("no residual records")
    return 100.0 * sum(r.within for r in records) / len(records)


@dataclass(frozen=True)
class AcceptanceVerdict:
    system_accuracy: float
    ceiling_accuracy: float
    gap: float
    relative_accuracy: float
    threshold: float
    passed: bool
    passed_absolute: bool


def evaluate_acceptance(
    system_accuracy: float, ceiling_accuracy: float, threshold: float = SYSTEM_ACCEPTABLE_RATE
) -> AcceptanceVerdict:
    """Compare accuracy against the acceptable rate.

    ``passed`` compares accuracy relative to the ceiling; ``passed_absolute``
    compares the raw system accuracy.
    """
    for name, v in (("system", system_accuracy), ("ceiling", ceiling_accuracy), ("threshold", threshold)):
        if not 0.0 <= v <= 100.0:
            raise DomainError(f"{name} accuracy {v} outside [0, 100]")
    relative = 100.0 * system_accuracy / ceiling_accuracy if ceiling_accuracy > 0 else 100.0
    return AcceptanceVerdict(
        system_accuracy=system_accuracy,
        ceiling_accuracy=ceiling_accuracy,
        gap=ceiling_accuracy - system_accuracy,
        relative_accuracy=relative,
        threshold=threshold,
        passed=relative >= threshold,
        passed_absolute=system_accuracy >= threshold,
    )


@dataclass
class PopulationReport:
    n_included: int
    n_excluded: int
    mean_transformed_lt: float
    ci: tuple[float, float]
    system_accuracy: float
    ceiling_accuracy: float | None
    total_accuracy: float | None  # ceiling minus system accuracy, points
    residuals: list[ResidualRecord]
    verdict: AcceptanceVerdict
    excluded: list[tuple[str, str]] = field(default_factory=list)
    advisories: list[tuple[str, str]] = field(default_factory=list)
    transformed_lts: dict[str, float] = field(default_factory=dict)
    precision: PrecisionReport | None = None


def population_report(
    tests: Sequence[AthleteTest],
    *,
    fraction: float = DEFAULT_FRACTION,
    exclude: Iterable[str] = (),
    degree: int = 3,
    n_resamples: int = DEFAULT_BCA_RESAMPLES,
    confidence: float = 0.95,
    seed: int = 0,
    precision: PrecisionConfig | None = None,
    ceiling: float | None = None,
    threshold: float = SYSTEM_ACCEPTABLE_RATE,
    bucket_by: str = "reference",
    workers: int = 1,
) -> PopulationReport:
    """Heuristic vs Dmax over a population.

    The ceiling accuracy is computed from ``precision`` when given,
    otherwise taken from ``ceiling``.  Without either, the verdict is
    judged against a ceiling of 100%.
    """
    manual = set(exclude)
    excluded = []
    included = []
    references = {}
    for t in tests:
        if t.athlete_id in manual or t.excluded:
            excluded.append((t.athlete_id, "manual"))
            continue
        try:
            _, est = dmax_for_test(t, degree)
        except (FitError, NoDmaxPointError, DomainError) as exc:
            excluded.append((t.athlete_id, f"Dmax failed: {exc}"))
            continue
        included.append(t)
        references[t.athlete_id] = est.lt_speed
    if len(included) < 3:
        raise DomainError(f"only {len(included)} usable athletes; need at least 3")

    advisories = [f for f in flag_outliers(included, degree=degree) if f[1] != "manual"]

    residuals = []
    transformed = {}
    for t in included:
        reserve = speed_reserve(t.pts, t.initial_speed)
        transformed[t.athlete_id] = transform_lt(references[t.athlete_id], reserve)
        residuals.append(
            residual_record(t.athlete_id, heuristic_lt(reserve, fraction), references[t.athlete_id], bucket_by)
        )
    values = np.array(list(transformed.values()))
    ci = bca_ci(values, n_resamples, confidence, seed)
    acc = system_accuracy(residuals)

    prec_report = None
    if precision is not None:
        prec_report = dmax_precision(included, precision, workers=workers)
        ceiling = prec_report.ceiling_accuracy
    verdict = evaluate_acceptance(acc, 100.0 if ceiling is None else ceiling, threshold)
    return PopulationReport(
        n_included=len(included),
        n_excluded=len(excluded),
        mean_transformed_lt=float(values.mean()),
        ci=ci,
        system_accuracy=acc,
        ceiling_accuracy=ceiling,
        total_accuracy=verdict.gap if ceiling is not None else None,
        residuals=residuals,
        verdict=verdict,
        excluded=excluded,
        advisories=advisories,
        transformed_lts=transformed,
        precision=prec_report,
    )
