"""Seeded synthetic populations of incremental treadmill tests.

Each athlete's noise-free curve is ``baseline + a * exp(b * (s - s1))``.
The growth rate is solved so the Dmax LT of the degree-3 fit to the sampled
stages lands on a drawn target, then per-point observation noise is added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core import AthleteTest, LactatePoint, TestProtocol
from .dmax import dmax_grid_scan, dmax_lt, fit_lactate_curve
from .errors import ConfigError, LactateLabError, NoDmaxPointError

# Dmax of a convex exponential always sits past the chord midpoint
_PERCENT_BOUNDS = (51.0, 97.0)
_MAX_RETRIES = 50
_GROWTH_BRACKET = (0.05, 15.0)


@dataclass(frozen=True)
class SynthConfig:
    n_athletes: int = 50
    points_per_athlete: int = 8
    protocol: TestProtocol = field(default_factory=TestProtocol)
    lt_percent_mean: float = 59.6
    lt_percent_sd: float = 2.5
    pts_range: tuple[float, float] = (14.5, 19.5)
    baseline_lactate: float = 1.0
    peak_lactate_range: tuple[float, float] = (6.0, 11.0)
    curve_noise_sd: float = 0.05
    seed: int = 0
    degree: int = 3

    def __post_init__(self):
        if self.n_athletes < 1:
            raise ConfigError("n_athletes must be >= 1")
        if self.points_per_athlete < max(4, self.degree + 1):
            raise ConfigError("points_per_athlete must be >= 4")
        if self.lt_percent_sd < 0 or self.curve_noise_sd < 0:
            raise ConfigError("standard deviations must be >= 0")
        lo, hi = self.pts_range
        if not self.protocol.initial_speed < lo <= hi:
            raise ConfigError("pts_range must lie above the initial speed")
        if not 0 < self.baseline_lactate < self.peak_lactate_range[0] <= self.peak_lactate_range[1]:
            raise ConfigError("need 0 < baseline < peak lactate range")
        if not self.seed >= 0:
            raise ConfigError("seed must be non-negative")
        if not self.pts_candidates():
            raise ConfigError(
                f"no stage in pts_range {self.pts_range} gives {self.points_per_athlete} points"
            )

    def pts_candidates(self) -> list[float]:
        stages = self.protocol.stage_speeds(self.pts_range[1])
        lo, hi = self.pts_range
        return [s for k, s in enumerate(stages) if k + 1 >= self.points_per_athlete and lo <= s <= hi]


def _even_indices(m: int, n: int) -> list[int]:
    return sorted({round(i * (m - 1) / (n - 1)) for i in range(n)})


def _curve(speeds, baseline, peak, growth):
    s1, sn = speeds[0], speeds[-1]
    rate = growth / (sn - s1)
    amp = (peak - baseline) * math.exp(-growth)
    return baseline + amp * np.exp(rate * (np.asarray(speeds) - s1))


def _fit_percent(speeds, lactate, degree, initial, pts):
    pts_list = [LactatePoint(s, c) for s, c in zip(speeds, lactate)]
    curve = fit_lactate_curve(pts_list, degree)
    est = dmax_lt(curve, pts_list[0], pts_list[-1])
    return (est.lt_speed - initial) / (pts - initial) * 100.0, curve, pts_list


def _athlete(i: int, cfg: SynthConfig) -> AthleteTest:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(i,)))
    initial = cfg.protocol.initial_speed
    candidates = cfg.pts_candidates()
    for _ in range(_MAX_RETRIES):
        pts = float(candidates[rng.integers(len(candidates))])
        stages = cfg.protocol.stage_speeds(pts)
        speeds = np.array([stages[k] for k in _even_indices(len(stages), cfg.points_per_athlete)])
        target = rng.normal(cfg.lt_percent_mean, cfg.lt_percent_sd)
        peak = rng.uniform(*cfg.peak_lactate_range)
        if not _PERCENT_BOUNDS[0] < target < _PERCENT_BOUNDS[1]:
            continue

        def miss(growth):
            return _fit_percent(speeds, _curve(speeds, cfg.baseline_lactate, peak, growth), cfg.degree, initial, pts)[0] - target

        try:
            growth = brentq(miss, *_GROWTH_BRACKET, xtol=1e-12)
        except (ValueError, NoDmaxPointError):
            continue
        clean = _curve(speeds, cfg.baseline_lactate, peak, growth)
        _, curve, pl = _fit_percent(speeds, clean, cfg.degree, initial, pts)
        target_speed = initial + target / 100.0 * (pts - initial)
        if abs(dmax_grid_scan(curve, pl[0], pl[-1]).lt_speed - target_speed) > 0.05:
            continue
        noisy = clean + cfg.curve_noise_sd * rng.standard_normal(len(clean))
        for _ in range(_MAX_RETRIES):
            bad = noisy <= 0
            if not bad.any():
                break
            noisy[bad] = clean[bad] + cfg.curve_noise_sd * rng.standard_normal(int(bad.sum()))
        points = tuple(LactatePoint(float(s), float(c)) for s, c in zip(speeds, noisy))
        return AthleteTest(f"A{i + 1:03d}", points, pts, cfg.protocol)
    raise LactateLabError(f"could not generate athlete {i} after {_MAX_RETRIES} attempts")


def generate_population(config: SynthConfig) -> list[AthleteTest]:
    return [_athlete(i, config) for i in range(config.n_athletes)]
