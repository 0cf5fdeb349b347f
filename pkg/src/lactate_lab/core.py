"""Domain types for incremental treadmill tests.

Speeds are stored in km/h everywhere; pace is derived on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError, DomainError

MIN_POINTS_FOR_DMAX = 4


@dataclass(frozen=True)
class Stage:
    """One rule of a stage schedule.

    ``increment`` km/h is added every ``duration`` minutes while the current
    speed is below ``until_speed`` (``None`` means until exhaustion).
    """

    increment: float
    duration: float
    until_speed: float | None = None


@dataclass(frozen=True)
class TestProtocol:
    initial_speed: float = 9.0
    slope_percent: float = 1.0
    stage_schedule: tuple[Stage, ...] = (
        Stage(1.5, 4.0, 13.5),
        Stage(1.0, 4.0, None),
    )
    recovery_between_stages: float = 1.0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not (self.initial_speed > 0 and math.isfinite(self.initial_speed)):
            raise ConfigError("initial_speed must be positive")
        if not self.stage_schedule:
            raise ConfigError("stage_schedule must not be empty")
        previous = self.initial_speed
        for i, stage in enumerate(self.stage_schedule):
            if not stage.increment > 0:
                raise ConfigError(f"stage {i}: increment must be positive")
            if stage.until_speed is None:
                if i != len(self.stage_schedule) - 1:
                    raise ConfigError("only the last stage may run until exhaustion")
                continue
            if not stage.until_speed > previous:
                raise ConfigError("schedule speeds must be strictly increasing")
            previous = stage.until_speed

    def stage_speeds(self, max_speed: float) -> list[float]:
        """Speeds of every stage up to and including ``max_speed``."""
        speeds = [self.initial_speed]
        speed = self.initial_speed
        for stage in self.stage_schedule:
            limit = math.inf if stage.until_speed is None else stage.until_speed
            while speed < limit - 1e-9:
                nxt = speed + stage.increment
                if nxt > max_speed + 1e-9:
                    return speeds
                speed = nxt
                speeds.append(speed)
        return speeds


@dataclass(frozen=True)
class LactatePoint:
    stage_speed: float
    concentration: float


@dataclass(frozen=True)
class AthleteTest:
    athlete_id: str
    points: tuple[LactatePoint, ...]
    pts: float
    protocol: TestProtocol = field(default_factory=TestProtocol)
    excluded: bool = False

    __test__ = False

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def speeds(self) -> list[float]:
        return [p.stage_speed for p in self.points]

    @property
    def concentrations(self) -> list[float]:
        return [p.concentration for p in self.points]

    @property
    def initial_speed(self) -> float:
        return self.protocol.initial_speed


@dataclass(frozen=True)
class Finding:
    """One violated invariant found by :func:`validate_test`."""

    athlete_id: str
    field: str
    message: str

    def __str__(self):
        return f"{self.athlete_id}: {self.field}: {self.message}"


def validate_test(test: AthleteTest, min_points: int = MIN_POINTS_FOR_DMAX) -> list[Finding]:
    """Check every AthleteTest invariant; an empty list means the test is valid."""
    found = []

    def add(fld, msg):
        found.append(Finding(test.athlete_id, fld, msg))

    speeds = test.speeds
    for p in test.points:
        if not (math.isfinite(p.stage_speed) and p.stage_speed > 0):
            add("stage_speed", f"non-positive or non-finite stage speed {p.stage_speed!r}")
        if not (math.isfinite(p.concentration) and p.concentration > 0):
            add("concentration", f"non-positive or non-finite lactate {p.concentration!r}")
    if any(b <= a for a, b in zip(speeds, speeds[1:])):
        add("points", "non-increasing speeds")
    if len(test.points) < min_points:
        add("points", f"insufficient points for Dmax (<{min_points})")
    if not math.isfinite(test.pts):
        add("pts", "non-finite PTS")
    else:
        if speeds and test.pts < max(speeds):
            add("pts", "PTS below last stage speed")
        if test.pts <= test.initial_speed:
            add("pts", "PTS not above initial speed")
    return found


@dataclass(frozen=True)
class Pace:
    """Running pace in min/km."""

    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0):
            raise DomainError(f"pace must be positive and finite, got {self.value!r}")

    @property
    def seconds_per_km(self) -> float:
        return self.value * 60.0

    def __str__(self):
        return format_pace(self.value)


def speed_to_pace(speed: float) -> Pace:
    if not (math.isfinite(speed) and speed > 0):
        raise DomainError(f"speed must be positive and finite, got {speed!r}")
    return Pace(60.0 / speed)


def pace_to_speed(pace: Pace | float) -> float:
    value = pace.value if isinstance(pace, Pace) else pace
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"pace must be positive and finite, got {value!r}")
    return 60.0 / value


def format_pace(minutes: float) -> str:
    """Render decimal minutes as ``M:SS.s``."""
    tenths = round(minutes * 600)
    whole, rest = divmod(tenths, 600)
    return f"{whole}:{rest / 10:04.1f}"


def subsample_points(test: AthleteTest, n: int) -> AthleteTest:
    """Keep ``n`` points spread evenly over the test, first and last included."""
    m = len(test.points)
    if not 2 <= n <= m:
        raise DomainError(f"cannot keep {n} of {m} points")
    idx = sorted({round(i * (m - 1) / (n - 1)) for i in range(n)})
    return AthleteTest(
        athlete_id=test.athlete_id,
        points=tuple(test.points[i] for i in idx),
        pts=test.pts,
        protocol=test.protocol,
        excluded=test.excluded,
    )


def group_by_point_count(tests: Sequence[AthleteTest]) -> dict[int, list[AthleteTest]]:
    groups: dict[int, list[AthleteTest]] = {}
    for t in tests:
        groups.setdefault(len(t.points), []).append(t)
    return dict(sorted(groups.items()))
