"""Monte Carlo precision of the Dmax protocol under blood-lactate measurement error.

Athletes are bootstrapped with replacement.  Each resampled athlete gets
``n_random_samples`` plausible lactate curves: draw *j* of every point goes
into curve *j*.  The Dmax LT of each plausible curve, minus the mean over
that athlete's curves, is one error sample.  The SD of all error samples in
a point-count group is that group's standard error of measurement.

Every unit of work draws from its own substream keyed by
``(master_seed, point_count, resample, slot)``, and results are reduced in
index order, so output does not depend on the number of workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import AthleteTest, LactatePoint
from .dmax import BatchDmax, dmax_for_test
from .errors import ConfigError, DomainError, FitError, LactateLabError, NoDmaxPointError
from .heuristic import ACCEPTABLE_ERROR_TABLE

_MAX_REDRAWS = 1000

_SELECT, _NOISE = 0, 1


@dataclass(frozen=True)
class PrecisionConfig:
    measurement_sd: float
    n_bootstrap_resamples: int = 20
    n_random_samples: int = 20
    master_seed: int = 0
    degree: int = 3
    bucket_by: str = "reference"

    def __post_init__(self):
        if not (math.isfinite(self.measurement_sd) and self.measurement_sd >= 0):
            raise ConfigError("measurement_sd must be finite and >= 0")
        if self.n_bootstrap_resamples < 1:
            raise ConfigError("n_bootstrap_resamples must be >= 1")
        if self.n_random_samples < 2:
            raise ConfigError("n_random_samples must be >= 2")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a non-negative 64-bit integer")
        if self.bucket_by not in ("reference", "estimate"):
            raise ConfigError(f"unknown bucket_by {self.bucket_by!r}")


@dataclass(frozen=True)
class GroupPrecision:
    n_points: int
    n_athletes: int
    sem: float
    sem_kmh: float
    r_squared: float
    n_samples: int
    n_dropped: int

    @property
    def drop_rate(self) -> float:
        total = self.n_samples + self.n_dropped
        return self.n_dropped / total if total else 0.0


@dataclass(frozen=True)
class ErrorSamples:
    """Flat columns, one entry per plausible Dmax LT, in canonical order."""

    athlete_ids: tuple[str, ...]
    n_points: np.ndarray
    resample: np.ndarray
    slot: np.ndarray
    athlete: np.ndarray
    lt_speed: np.ndarray
    reference_lt: np.ndarray
    error_percent: np.ndarray
    error_kmh: np.ndarray
    residual_s_per_km: np.ndarray
    limit_s_per_km: np.ndarray
    within: np.ndarray

    def __len__(self):
        return len(self.error_percent)


@dataclass
class PrecisionReport:
    config: PrecisionConfig
    per_point_count: dict[int, GroupPrecision]
    error_samples: ErrorSamples
    ceiling_accuracy: float | None
    n_dropped: int = 0
    warnings: list[str] = field(default_factory=list)


def plausible_measurements(
    point: LactatePoint, n: int, noise_stream: np.random.Generator, sd: float
) -> np.ndarray:
    """``n`` plausible readings of one measured lactate value.

    Non-positive draws are redrawn so every value stays a valid concentration.
    """
    measured = float(point.concentration)
    if sd == 0:
        return np.full(n, measured)
    values = measured + sd * noise_stream.standard_normal(n)
    for _ in range(_MAX_REDRAWS):
        bad = values <= 0
        if not bad.any():
            return values
        values[bad] = measured + sd * noise_stream.standard_normal(int(bad.sum()))
    raise DomainError(f"could not draw positive lactate around {measured} with sd {sd}")


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _centered(x: np.ndarray) -> np.ndarray:
    # offset by the first value so equal inputs give exactly zero
    if len(x) == 0:
        return x
    shifted = x - x[0]
    return shifted - shifted.mean()


_THRESHOLDS = np.array([r.pace_threshold for r in ACCEPTABLE_ERROR_TABLE])
_LIMITS = np.array([r.max_error_s_per_km for r in ACCEPTABLE_ERROR_TABLE])


def _limits_for(paces: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(_THRESHOLDS, paces, side="right") - 1
    out = np.where(idx >= 0, _LIMITS[np.clip(idx, 0, None)], np.nan)
    return np.where(np.isfinite(paces), out, np.nan)


@dataclass
class _Athlete:
    index: int
    test: AthleteTest
    batch: BatchDmax
    nominal_lt: float
    nominal_percent: float


def _prepare_group(indexed, degree, notes):
    athletes = []
    for i, t in indexed:
        try:
            _, est = dmax_for_test(t, degree)
            batch = BatchDmax(t.speeds, degree)
        except (FitError, NoDmaxPointError, DomainError) as exc:
            notes.append(f"athlete {t.athlete_id}: nominal Dmax failed ({exc}); left out")
            continue
        pct = (est.lt_speed - t.initial_speed) / (t.pts - t.initial_speed) * 100.0
        athletes.append(_Athlete(i, t, batch, est.lt_speed, pct))
    return athletes


def _run_unit(args):
    athletes, n_points, b, cfg = args
    g = len(athletes)
    picks = _stream(cfg.master_seed, _SELECT, n_points, b).integers(0, g, g)
    S = cfg.n_random_samples
    out = []
    dropped = 0
    for slot, a in enumerate(picks):
        ath = athletes[a]
        rng = _stream(cfg.master_seed, _NOISE, n_points, b, slot)
        draws = np.column_stack(
            [plausible_measurements(p, S, rng, cfg.measurement_sd) for p in ath.test.points]
        )
        lts = ath.batch(draws)
        ok = np.isfinite(lts)
        dropped += int(S - ok.sum())
        lts = lts[ok]
        t = ath.test
        pct = (lts - t.initial_speed) / (t.pts - t.initial_speed) * 100.0
        ref_pace = 60.0 / ath.nominal_lt
        est_pace = 60.0 / lts
        residual = np.abs(est_pace - ref_pace) * 60.0
        if cfg.bucket_by == "reference":
            limit = np.full(len(lts), _limits_for(np.array([ref_pace]))[0])
        else:
            limit = _limits_for(est_pace)
        ref = np.full(len(lts), ath.nominal_lt)
        out.append((slot, ath.index, lts, ref, _centered(pct), _centered(lts), residual, limit))
    return n_points, b, out, dropped


def dmax_precision(
    population: Sequence[AthleteTest], config: PrecisionConfig, workers: int = 1
) -> PrecisionReport:
    """Dmax precision per lactate-point count, plus the ceiling accuracy."""
    notes: list[str] = []
    groups: dict[int, list[tuple[int, AthleteTest]]] = {}
    for i, t in enumerate(population):
        groups.setdefault(len(t.points), []).append((i, t))
    all_ids = tuple(t.athlete_id for t in population)

    prepared = {}
    for n_points, indexed in sorted(groups.items()):
        if len(indexed) < 2:
            notes.append(f"group with {n_points} points has {len(indexed)} athlete(s); skipped")
            continue
        athletes = _prepare_group(indexed, config.degree, notes)
        if len(athletes) < 2:
            notes.append(f"group with {n_points} points has < 2 usable athletes; skipped")
            continue
        prepared[n_points] = athletes

    tasks = [
        (athletes, n_points, b, config)
        for n_points, athletes in prepared.items()
        for b in range(config.n_bootstrap_resamples)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_unit, tasks))
    else:
        results = [_run_unit(t) for t in tasks]

    cols = {k: [] for k in ("n_points", "resample", "slot", "athlete", "lt", "ref", "err", "err_kmh", "res", "lim")}
    dropped_by_group: dict[int, int] = {}
    for n_points, b, units, dropped in results:
        dropped_by_group[n_points] = dropped_by_group.get(n_points, 0) + dropped
        for slot, athlete, lts, ref, err, err_kmh, res, lim in units:
            k = len(lts)
            cols["n_points"].append(np.full(k, n_points))
            cols["resample"].append(np.full(k, b))
            cols["slot"].append(np.full(k, slot))
            cols["athlete"].append(np.full(k, athlete))
            cols["lt"].append(lts)
            cols["ref"].append(ref)
            cols["err"].append(err)
            cols["err_kmh"].append(err_kmh)
            cols["res"].append(res)
            cols["lim"].append(lim)

    def cat(name, dtype):
        parts = cols[name]
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype)

    samples = ErrorSamples(
        athlete_ids=all_ids,
        n_points=cat("n_points", np.int64),
        resample=cat("resample", np.int64),
        slot=cat("slot", np.int64),
        athlete=cat("athlete", np.int64),
        lt_speed=cat("lt", float),
        reference_lt=cat("ref", float),
        error_percent=cat("err", float),
        error_kmh=cat("err_kmh", float),
        residual_s_per_km=cat("res", float),
        limit_s_per_km=cat("lim", float),
        within=np.zeros(0, bool),
    )
    with np.errstate(invalid="ignore"):
        within = samples.residual_s_per_km <= samples.limit_s_per_km + 1e-9
    object.__setattr__(samples, "within", within)

    per_group = {}
    for n_points, athletes in prepared.items():
        mask = samples.n_points == n_points
        err = samples.error_percent[mask]
        n_drop = dropped_by_group.get(n_points, 0)
        if n_drop:
            notes.append(f"group with {n_points} points: {n_drop} plausible curves without a Dmax point dropped")
        if len(err) == 0:
            notes.append(f"group with {n_points} points produced no usable samples")
            continue
        err_var = float(np.var(err))
        nominal_var = float(np.var([a.nominal_percent for a in athletes]))
        if nominal_var > 0:
            r2 = min(1.0, max(0.0, err_var / nominal_var))
        else:
            r2 = 0.0 if err_var == 0 else 1.0
        per_group[n_points] = GroupPrecision(
            n_points=n_points,
            n_athletes=len(athletes),
            sem=math.sqrt(err_var),
            sem_kmh=float(np.std(samples.error_kmh[mask])),
            r_squared=r2,
            n_samples=int(mask.sum()),
            n_dropped=n_drop,
        )

    scored = np.isfinite(samples.limit_s_per_km) & np.isfinite(samples.residual_s_per_km)
    if (~scored).any():
        notes.append(f"{int((~scored).sum())} plausible LTs faster than 3 min/km left out of the ceiling accuracy")
    ceiling = 100.0 * float(within[scored].sum()) / int(scored.sum()) if scored.any() else None

    for note in notes:
        warnings.warn(note, stacklevel=2)
    return PrecisionReport(
        config=config,
        per_point_count=per_group,
        error_samples=samples,
        ceiling_accuracy=ceiling,
        n_dropped=sum(dropped_by_group.values()),
        warnings=notes,
    )


def ceiling_accuracy(population: Sequence[AthleteTest], config: PrecisionConfig, workers: int = 1) -> float:
    """Percent of plausible Dmax LTs within the individual acceptable error."""
    report = dmax_precision(population, config, workers=workers)
    if report.ceiling_accuracy is None:
        raise LactateLabError("no plausible Dmax LTs to score")
    return report.ceiling_accuracy
