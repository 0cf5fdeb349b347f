"""Lactate threshold estimation: Dmax protocol, speed-reserve heuristic,
and Monte Carlo precision of the Dmax protocol."""

from .core import (
    AthleteTest,
    Finding,
    LactatePoint,
    Pace,
    Stage,
    TestProtocol,
    pace_to_speed,
    speed_to_pace,
    subsample_points,
    validate_test,
)
from .dmax import (
    DmaxEstimate,
    FittedCurve,
    dmax_for_test,
    dmax_grid_scan,
    dmax_lt,
    fit_lactate_curve,
    flag_outliers,
)
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    FormatError,
    LactateLabError,
    NoDmaxPointError,
    OutOfScopeError,
)
from .heuristic import (
    ACCEPTABLE_ERROR_TABLE,
    SpeedReserve,
    acceptable_error_for,
    heuristic_lt,
    inverse_transform,
    speed_reserve,
    transform_lt,
    within_acceptable,
)
from .precision import PrecisionConfig, PrecisionReport, ceiling_accuracy, dmax_precision, plausible_measurements
from .stats import (
    PopulationReport,
    ResidualRecord,
    bca_ci,
    evaluate_acceptance,
    population_report,
    system_accuracy,
)
from .synth import SynthConfig, generate_population

__version__ = "0.1.0"

__all__ = [
    "ACCEPTABLE_ERROR_TABLE",
    "AthleteTest",
    "ConfigError",
    "DmaxEstimate",
    "DomainError",
    "Finding",
    "FitError",
    "FittedCurve",
    "FormatError",
    "LactateLabError",
    "LactatePoint",
    "NoDmaxPointError",
    "OutOfScopeError",
    "Pace",
    "PopulationReport",
    "PrecisionConfig",
    "PrecisionReport",
    "ResidualRecord",
    "SpeedReserve",
    "Stage",
    "SynthConfig",
    "TestProtocol",
    "acceptable_error_for",
    "bca_ci",
    "ceiling_accuracy",
    "dmax_for_test",
    "dmax_grid_scan",
    "dmax_lt",
    "dmax_precision",
    "evaluate_acceptance",
    "fit_lactate_curve",
    "flag_outliers",
    "generate_population",
    "heuristic_lt",
    "inverse_transform",
    "pace_to_speed",
    "plausible_measurements",
    "population_report",
    "speed_reserve",
    "speed_to_pace",
    "subsample_points",
    "system_accuracy",
    "transform_lt",
    "validate_test",
    "within_acceptable",
]
