"""Speed-reserve heuristic and the individual acceptable-error table."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import speed_to_pace
from .errors import ConfigError, DomainError, OutOfScopeError

DEFAULT_FRACTION = 0.60
EMPIRICAL_FRACTION = 0.596

# absorbs float noise from pace conversions at bucket limits
_LIMIT_SLACK = 1e-9


@dataclass(frozen=True)
class SpeedReserve:
    """Endurance running speed reserve: PTS minus the initial test speed."""

    ersr: float
    initial_speed: float
    pts: float


@dataclass(frozen=True)
class AcceptableErrorRow:
    pace_threshold: float
    max_error_s_per_km: float
    max_error_percent: float


ACCEPTABLE_ERROR_TABLE: tuple[AcceptableErrorRow, ...] = (
    AcceptableErrorRow(3.0, 3.0, 1.7),
    AcceptableErrorRow(3.5, 5.0, 2.4),
    AcceptableErrorRow(4.0, 10.0, 4.2),
    AcceptableErrorRow(4.5, 15.0, 5.5),
    AcceptableErrorRow(5.0, 20.0, 6.6),
)


def speed_reserve(pts: float, initial_speed: float) -> SpeedReserve:
    if not (math.isfinite(pts) and math.isfinite(initial_speed)):
        raise DomainError("speeds must be finite")
    if not initial_speed > 0:
        raise DomainError("initial speed must be positive")
    if not pts > initial_speed:
        raise DomainError(f"PTS {pts} must exceed initial speed {initial_speed}")
    return SpeedReserve(ersr=pts - initial_speed, initial_speed=initial_speed, pts=pts)


def transform_lt(lt_speed: float, reserve: SpeedReserve) -> float:
    """LT as a percentage of the speed reserve above the initial speed."""
    return (lt_speed - reserve.initial_speed) / reserve.ersr * 100.0


def inverse_transform(percent: float, reserve: SpeedReserve) -> float:
    return reserve.initial_speed + percent / 100.0 * reserve.ersr


def heuristic_lt(reserve: SpeedReserve, fraction: float = DEFAULT_FRACTION) -> float:
    if not (math.isfinite(fraction) and 0.0 < fraction <= 1.0):
        raise ConfigError(f"fraction must lie in (0, 1], got {fraction!r}")
    return reserve.initial_speed + fraction * reserve.ersr


def acceptable_error_for(pace_at_lt: float) -> AcceptableErrorRow:
    """Row of the acceptable-error table for a pace in min/km.

    Buckets are lower-inclusive: a pace exactly on a threshold takes that row.
    """
    if not math.isfinite(pace_at_lt):
        raise DomainError("pace must be finite")
    row = None
    for candidate in ACCEPTABLE_ERROR_TABLE:
        if pace_at_lt >= candidate.pace_threshold:
            row = candidate
    if row is None:
        raise OutOfScopeError(
            f"pace {pace_at_lt:.3f} min/km is faster than 3 min/km, above the target population"
        )
    return row


def within_acceptable(
    estimate_speed: float, reference_speed: float, bucket_by: str = "reference"
) -> tuple[float, bool]:
    """Absolute pace residual in s/km and whether it is within the acceptable error.

    ``bucket_by`` picks which pace selects the table row ("reference" or
    "estimate").
    """
    est = speed_to_pace(estimate_speed).value
    ref = speed_to_pace(reference_speed).value
    residual = abs(est - ref) * 60.0
    if bucket_by == "reference":
        row = acceptable_error_for(ref)
    elif bucket_by == "estimate":
        row = acceptable_error_for(est)
    else:
        raise ConfigError(f"unknown bucket_by {bucket_by!r}")
    return residual, residual <= row.max_error_s_per_km + _LIMIT_SLACK
