"""Lactate curve fitting and the Dmax lactate threshold.

The curve is a least-squares polynomial in speed.  The Dmax point is the
point of the fitted curve farthest below the chord joining the first and
last measured points.  It is found analytically from the stationary points
of the chord-to-curve gap; :func:`dmax_grid_scan` is a brute-force scan
kept for verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .core import AthleteTest, LactatePoint
from .errors import DomainError, FitError, NoDmaxPointError

MAX_CONDITION = 1e10


@dataclass(frozen=True)
class FittedCurve:
    """Polynomial lactate = f(speed).

    ``coefficients`` are in ascending powers of raw speed (km/h).  Evaluation
    goes through the centred, scaled form, which is better conditioned.
    """

    coefficients: tuple[float, ...]
    degree: int
    domain: tuple[float, float]
    rss: float
    center: float
    scale: float
    scaled_coefficients: tuple[float, ...]

    def _x(self, speed):
        return (np.asarray(speed, dtype=float) - self.center) / self.scale

    def __call__(self, speed):
        return np.polynomial.polynomial.polyval(self._x(speed), self.scaled_coefficients)

    def derivative(self, speed):
        d = np.polynomial.polynomial.polyder(self.scaled_coefficients)
        return np.polynomial.polynomial.polyval(self._x(speed), d) / self.scale


@dataclass(frozen=True)
class DmaxEstimate:
    lt_speed: float
    lt_lactate: float
    chord: tuple[tuple[float, float], tuple[float, float]]
    max_distance: float

    @property
    def chord_slope(self) -> float:
        (s1, l1), (sn, ln) = self.chord
        return (ln - l1) / (sn - s1)


def _scaling(speeds: np.ndarray) -> tuple[float, float]:
    center = float(np.mean(speeds))
    scale = float(np.max(speeds) - np.min(speeds)) / 2.0
    if not scale > 0:
        raise FitError("speeds span a zero-width range")
    return center, scale


def _design(speeds: np.ndarray, degree: int) -> tuple[np.ndarray, float, float]:
    center, scale = _scaling(speeds)
    x = (speeds - center) / scale
    X = np.vander(x, degree + 1, increasing=True)
    cond = np.linalg.cond(X)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise FitError(f"ill-conditioned design matrix (cond={cond:.3g})")
    return X, center, scale


def _check_speeds(speeds: np.ndarray, degree: int):
    if degree < 1:
        raise DomainError("degree must be at least 1")
    if len(speeds) < degree + 1:
        raise DomainError(f"degree {degree} fit needs at least {degree + 1} points, got {len(speeds)}")
    if np.any(np.diff(speeds) <= 0):
        raise DomainError("speeds must be strictly increasing")


def fit_lactate_curve(points: Sequence[LactatePoint], degree: int = 3) -> FittedCurve:
    """Least-squares polynomial fit of lactate against stage speed."""
    speeds = np.array([p.stage_speed for p in points], dtype=float)
    lactate = np.array([p.concentration for p in points], dtype=float)
    _check_speeds(speeds, degree)
    X, center, scale = _design(speeds, degree)
    coef, _, rank, _ = np.linalg.lstsq(X, lactate, rcond=None)
    if rank < degree + 1:
        raise FitError("rank-deficient design matrix")
    resid = X @ coef - lactate
    rss = float(resid @ resid)
    raw = Polynomial(coef)(Polynomial([-center / scale, 1.0 / scale])).coef
    raw = np.pad(raw, (0, degree + 1 - len(raw)))
    return FittedCurve(
        coefficients=tuple(float(c) for c in raw),
        degree=degree,
        domain=(float(speeds[0]), float(speeds[-1])),
        rss=rss,
        center=center,
        scale=scale,
        scaled_coefficients=tuple(float(c) for c in coef),
    )


def _gap_tolerance(l1, ln):
    return 1e-9 * np.maximum(1.0, np.maximum(np.abs(l1), np.abs(ln)))


def _stationary_points(q: np.ndarray) -> np.ndarray:
    """Real roots of each row of ascending-coefficient polynomials ``q``.

    Returns an array of shape (k, deg) padded with NaN.
    """
    k, n = q.shape
    deg = n - 1
    out = np.full((k, max(deg, 1)), np.nan)
    if deg == 0:
        return out
    if deg == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, 0] = np.where(q[:, 1] != 0, -q[:, 0] / q[:, 1], np.nan)
        return out
    if deg == 2:
        C, B, A = q[:, 0], q[:, 1], q[:, 2]
        linear = np.abs(A) <= 1e-13 * (np.abs(B) + np.abs(C))
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = B * B - 4.0 * A * C
            sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
            t = -0.5 * (B + np.copysign(sq, B))
            r1 = t / A
            r2 = np.where(t != 0, C / t, np.nan)
            lin = np.where(B != 0, -C / B, np.nan)
        out[:, 0] = np.where(linear, lin, r1)
        out[:, 1] = np.where(linear, np.nan, r2)
        return out
    for i in range(k):
        roots = np.roots(q[i, ::-1])
        real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))].real
        out[i, : len(real)] = real
    return out


def _polish(q: np.ndarray, roots: np.ndarray, steps: int = 2) -> np.ndarray:
    dq = np.stack([np.polynomial.polynomial.polyder(row) for row in q]) if q.shape[1] > 1 else None
    if dq is None:
        return roots
    r = roots.copy()
    for _ in range(steps):
        num = _polyval_rows(q, r)
        den = _polyval_rows(dq, r)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(den != 0, num / den, 0.0)
        r = r - step
    return r


def _polyval_rows(coefs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate row i's polynomial at every entry of ``x[i]`` (Horner)."""
    acc = np.zeros_like(x)
    for j in range(coefs.shape[1] - 1, -1, -1):
        acc = acc * x + coefs[:, j : j + 1]
    return acc


def _dmax_scaled(coefs, center, scale, s1, l1, sn, ln):
    """Vectorised Dmax over rows of scaled-coefficient fits.

    ``l1`` and ``ln`` are per-row chord endpoint lactate values.  Returns
    (lt_speed, perpendicular distance) per row; NaN where no Dmax exists.
    """
    coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
    l1 = np.broadcast_to(np.asarray(l1, dtype=float), coefs.shape[:1])
    ln = np.broadcast_to(np.asarray(ln, dtype=float), coefs.shape[:1])
    slope = (ln - l1) / (sn - s1)
    x1 = (s1 - center) / scale
    xn = (sn - center) / scale

    q = coefs[:, 1:] * np.arange(1, coefs.shape[1])
    q = q.copy()
    q[:, 0] -= slope * scale
    roots = _polish(q, _stationary_points(q))
    inside = (roots > x1) & (roots < xn)
    roots = np.where(inside, roots, np.nan)

    k = coefs.shape[0]
    cand = np.concatenate([np.full((k, 1), x1), roots, np.full((k, 1), xn)], axis=1)
    cand_speed = center + scale * cand
    cand_speed[:, 0] = s1
    cand_speed[:, -1] = sn
    chord = l1[:, None] + slope[:, None] * (cand_speed - s1)
    gap = chord - _polyval_rows(coefs, np.nan_to_num(cand, nan=x1))
    gap = np.where(np.isnan(cand), -np.inf, gap)

    best = gap.max(axis=1)
    ties = gap == best[:, None]
    speed = np.where(ties, cand_speed, np.inf).min(axis=1)
    ok = best > _gap_tolerance(l1, ln)
    dist = best / np.sqrt(1.0 + slope * slope)
    return np.where(ok, speed, np.nan), np.where(ok, dist, np.nan)


def dmax_lt(curve: FittedCurve, first_point: LactatePoint, last_point: LactatePoint) -> DmaxEstimate:
    """Dmax threshold of ``curve`` against the chord through two measured points."""
    s1, l1 = float(first_point.stage_speed), float(first_point.concentration)
    sn, ln = float(last_point.stage_speed), float(last_point.concentration)
    if not sn > s1:
        raise DomainError("zero-length chord: last point must be faster than the first")
    speed, dist = _dmax_scaled(
        np.array(curve.scaled_coefficients)[None, :], curve.center, curve.scale, s1, l1, sn, ln
    )
    if np.isnan(speed[0]):
        raise NoDmaxPointError("no Dmax point: the curve never lies below the chord")
    lt = float(speed[0])
    return DmaxEstimate(
        lt_speed=lt,
        lt_lactate=float(curve(lt)),
        chord=((s1, l1), (sn, ln)),
        max_distance=float(dist[0]),
    )


def dmax_grid_scan(
    curve: FittedCurve, first_point: LactatePoint, last_point: LactatePoint, n: int = 100_000
) -> DmaxEstimate:
    """Dense uniform-grid Dmax search. Slow reference for :func:`dmax_lt`."""
    s1, l1 = float(first_point.stage_speed), float(first_point.concentration)
    sn, ln = float(last_point.stage_speed), float(last_point.concentration)
    if not sn > s1:
        raise DomainError("zero-length chord")
    s = np.linspace(s1, sn, n)
    slope = (ln - l1) / (sn - s1)
    gap = l1 + slope * (s - s1) - curve(s)
    i = int(np.argmax(gap))
    if not gap[i] > _gap_tolerance(l1, ln):
        raise NoDmaxPointError("no Dmax point on grid")
    return DmaxEstimate(
        lt_speed=float(s[i]),
        lt_lactate=float(curve(s[i])),
        chord=((s1, l1), (sn, ln)),
        max_distance=float(gap[i] / math.sqrt(1 + slope * slope)),
    )


def dmax_for_test(test: AthleteTest, degree: int = 3) -> tuple[FittedCurve, DmaxEstimate]:
    curve = fit_lactate_curve(test.points, degree)
    return curve, dmax_lt(curve, test.points[0], test.points[-1])


class BatchDmax:
    """Dmax for many lactate vectors measured at the same speeds.

    The pseudo-inverse of the design matrix is computed once.  Each row is
    processed by identical arithmetic, so equal rows give equal results.
    """

    def __init__(self, speeds: Sequence[float], degree: int = 3):
        self.speeds = np.asarray(speeds, dtype=float)
        _check_speeds(self.speeds, degree)
        X, self.center, self.scale = _design(self.speeds, degree)
        self.degree = degree
        self._pinv = np.linalg.pinv(X)

    def __call__(self, lactate: np.ndarray) -> np.ndarray:
        """LT speeds for each row of ``lactate`` (k, n_points); NaN on failure."""
        Y = np.atleast_2d(np.asarray(lactate, dtype=float))
        coefs = (self._pinv[None, :, :] * Y[:, None, :]).sum(axis=-1)
        speed, _ = _dmax_scaled(
            coefs, self.center, self.scale, self.speeds[0], Y[:, 0], self.speeds[-1], Y[:, -1]
        )
        return speed


def transformed_percent(lt_speed: float, test: AthleteTest) -> float:
    return (lt_speed - test.initial_speed) / (test.pts - test.initial_speed) * 100.0


def flag_outliers(
    tests: Iterable[AthleteTest],
    exclusion_list: Iterable[str] = (),
    *,
    degree: int = 3,
    rss_threshold: float = 2.0,
) -> list[tuple[str, str]]:
    """Manual exclusions plus advisory flags.

    Advisory reasons annotate a test but never exclude it; only ids in
    ``exclusion_list`` (or tests already marked ``excluded``) are "manual".
    """
    manual = set(exclusion_list)
    flags = []
    for t in tests:
        if t.athlete_id in manual or t.excluded:
            flags.append((t.athlete_id, "manual"))
        try:
            curve, est = dmax_for_test(t, degree)
        except (FitError, NoDmaxPointError, DomainError) as exc:
            flags.append((t.athlete_id, f"Dmax failed: {exc}"))
            curve = est = None
        if est is not None:
            pct = transformed_percent(est.lt_speed, t)
            if not 0.0 <= pct <= 100.0:
                flags.append((t.athlete_id, "LT outside reserve"))
            if curve.rss > rss_threshold:
                flags.append((t.athlete_id, "fit rss above threshold"))
        c = t.concentrations
        if len(c) >= 2 and c[-1] <= c[-2]:
            flags.append((t.athlete_id, "non-increasing lactate over final stages"))
    return flags
