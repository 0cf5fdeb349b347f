"""Command-line interface.

Usage:
    lactate-lab estimate  --input F [--fraction 0.60]
    lactate-lab dmax      --input F [--degree 3]
    lactate-lab precision --input F --measurement-sd X --bootstrap B --samples S --seed N
    lactate-lab report    --input F [--exclude ID ...] [--threshold 95]
    lactate-lab synth     --athletes N --points P --seed S --out F

JSON goes to stdout; ``--out-dir`` also writes JSON, CSV tables, plot data
and figures.  Exit codes: 0 success, 2 input/validation error, 3
configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

from . import io as lio
from .core import TestProtocol, format_pace, speed_to_pace
from .dmax import dmax_for_test, flag_outliers, transformed_percent
from .errors import ConfigError, DomainError, FitError, FormatError, LactateLabError, NoDmaxPointError
from .heuristic import DEFAULT_FRACTION, heuristic_lt, speed_reserve
from .precision import PrecisionConfig, dmax_precision
from .stats import DEFAULT_BCA_RESAMPLES, SYSTEM_ACCEPTABLE_RATE, format_mean_ci, population_report
from .synth import SynthConfig, generate_population

EXIT_OK, EXIT_INPUT, EXIT_CONFIG = 0, 2, 3
SEED_ENV = "LACTATE_LAB_SEED"


class _InputError(Exception):
    pass


def _err(msg):
    print(msg, file=sys.stderr)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        raise ConfigError(f"--seed is required (or set {SEED_ENV})")
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _load(args, min_points=4):
    protocol = TestProtocol(initial_speed=args.initial_speed)
    tests, findings = lio.parse_csv(args.input, protocol, min_points)
    if findings:
        for f in findings:
            _err(f"finding: {f}")
        raise _InputError(f"{len(findings)} validation finding(s)")
    return tests


def _out_dir(args):
    if args.out_dir is None:
        return None
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _emit(args, command, config, results):
    text = lio.render_document(command, config, results)
    sys.stdout.write(text)
    d = _out_dir(args)
    if d is not None:
        (d / f"{command}.json").write_text(text, encoding="utf-8")
    return d


def _figures_wanted(args, d):
    return d is not None and not args.no_figures


def cmd_estimate(args):
    if not 0 < args.fraction <= 1:
        raise ConfigError("--fraction must lie in (0, 1]")
    tests = _load(args, min_points=1)
    rows = []
    for t in tests:
        reserve = speed_reserve(t.pts, t.initial_speed)
        lt = heuristic_lt(reserve, args.fraction)
        rows.append(
            {
                "athlete_id": t.athlete_id,
                "pts_kmh": t.pts,
                "ersr_kmh": reserve.ersr,
                "lt_kmh": lt,
                "lt_pace_min_per_km": speed_to_pace(lt).value,
            }
        )
    if args.format == "text":
        for r in rows:
            print(f"{r['athlete_id']}: {r['lt_kmh']:.2f} km/h, {format_pace(r['lt_pace_min_per_km'])} min/km")
        d = _out_dir(args)
    else:
        d = _emit(args, "estimate", {"fraction": args.fraction, "initial_speed": args.initial_speed}, rows)
    if d is not None:
        lio.write_rows(d / "estimate.csv", list(rows[0]) if rows else [], [list(r.values()) for r in rows])
    return EXIT_OK


def cmd_dmax(args):
    tests = _load(args)
    flags = flag_outliers(tests, args.exclude, degree=args.degree, rss_threshold=args.rss_threshold)
    by_id = {}
    for aid, reason in flags:
        by_id.setdefault(aid, []).append(reason)
    rows = []
    for t in tests:
        row = {"athlete_id": t.athlete_id, "n_points": len(t.points), "pts_kmh": t.pts}
        try:
            curve, est = dmax_for_test(t, args.degree)
        except (FitError, NoDmaxPointError, DomainError) as exc:
            row.update(lt_kmh=None, error=str(exc))
        else:
            row.update(
                lt_kmh=est.lt_speed,
                lt_lactate_mmol_per_l=est.lt_lactate,
                lt_pace_min_per_km=speed_to_pace(est.lt_speed).value,
                transformed_lt_percent=transformed_percent(est.lt_speed, t),
                max_distance=est.max_distance,
                rss=curve.rss,
                coefficients=list(curve.coefficients),
            )
        row["flags"] = by_id.get(t.athlete_id, [])
        rows.append(row)
    for aid, reason in flags:
        _err(f"advisory: {aid}: {reason}")
    config = {
        "degree": args.degree,
        "initial_speed": args.initial_speed,
        "exclude": list(args.exclude),
        "rss_threshold": args.rss_threshold,
    }
    d = _emit(args, "dmax", config, rows)
    if d is not None:
        cols = ["athlete_id", "n_points", "pts_kmh", "lt_kmh", "lt_pace_min_per_km", "transformed_lt_percent", "rss", "flags"]
        lio.write_rows(
            d / "dmax.csv", cols, [[r.get(c) if c != "flags" else ";".join(r["flags"]) for c in cols] for r in rows]
        )
        if _figures_wanted(args, d):
            from .plots import plot_lactate_curves

            plot_lactate_curves(tests, d / "lactate_curves.png", args.degree)
    return EXIT_OK


def _precision_config(args, seed):
    if args.measurement_sd is None:
        raise ConfigError("--measurement-sd is required; there is no built-in default")
    return PrecisionConfig(
        measurement_sd=args.measurement_sd,
        n_bootstrap_resamples=args.bootstrap,
        n_random_samples=args.samples,
        master_seed=seed,
        degree=args.degree,
        bucket_by=args.bucket_by,
    )


def _precision_results(report):
    return {
        "rows": [
            {
                "lactate_points": g.n_points,
                "n_athletes": g.n_athletes,
                "sem_percent_ersr": g.sem,
                "sem_kmh": g.sem_kmh,
                "r_squared": g.r_squared,
                "n_samples": g.n_samples,
                "n_dropped": g.n_dropped,
                "drop_rate": g.drop_rate,
            }
            for g in report.per_point_count.values()
        ],
        "ceiling_accuracy": report.ceiling_accuracy,
        "n_plausible_lts": len(report.error_samples),
        "n_dropped": report.n_dropped,
        "warnings": report.warnings,
    }


def _write_error_samples(path, report):
    es = report.error_samples
    ids = es.athlete_ids
    lio.write_rows(
        path,
        ["lactate_points", "resample", "slot", "athlete_id", "lt_kmh", "reference_lt_kmh",
         "error_percent_ersr", "error_kmh", "residual_s_per_km", "limit_s_per_km", "within"],
        zip(
            es.n_points.tolist(), es.resample.tolist(), es.slot.tolist(), (ids[a] for a in es.athlete.tolist()),
            es.lt_speed, es.reference_lt, es.error_percent, es.error_kmh, es.residual_s_per_km,
            es.limit_s_per_km, es.within,
        ),
    )


def cmd_precision(args):
    seed = _seed(args)
    cfg = _precision_config(args, seed)
    tests = _load(args)
    report = dmax_precision(tests, cfg, workers=args.workers)
    for w in report.warnings:
        _err(f"warning: {w}")
    config = {
        "measurement_sd": cfg.measurement_sd,
        "bootstrap": cfg.n_bootstrap_resamples,
        "samples": cfg.n_random_samples,
        "seed": seed,
        "degree": cfg.degree,
        "bucket_by": cfg.bucket_by,
        "initial_speed": args.initial_speed,
    }
    results = _precision_results(report)
    d = _emit(args, "precision", config, results)
    if d is not None:
        rows = results["rows"]
        lio.write_rows(d / "precision.csv", list(rows[0]) if rows else [], [list(r.values()) for r in rows])
        _write_error_samples(d / "error_samples.csv", report)
        if _figures_wanted(args, d):
            from .plots import plot_error_distribution, plot_precision_residuals

            plot_error_distribution(report, d / "error_distribution.png")
            plot_precision_residuals(report, d / "precision_residuals.png")
    return EXIT_OK


def cmd_report(args):
    seed = _seed(args)
    if not 0 < args.fraction <= 1:
        raise ConfigError("--fraction must lie in (0, 1]")
    if not 0 <= args.threshold <= 100:
        raise ConfigError("--threshold must lie in [0, 100]")
    if args.ceiling is not None and not 0 <= args.ceiling <= 100:
        raise ConfigError("--ceiling must lie in [0, 100]")
    if args.bca_resamples < 1:
        raise ConfigError("--bca-resamples must be >= 1")
    if not 0 < args.confidence < 1:
        raise ConfigError("--confidence must lie in (0, 1)")
    prec = _precision_config(args, seed) if args.measurement_sd is not None else None
    tests = _load(args)
    rep = population_report(
        tests,
        fraction=args.fraction,
        exclude=args.exclude,
        degree=args.degree,
        n_resamples=args.bca_resamples,
        confidence=args.confidence,
        seed=seed,
        precision=prec,
        ceiling=args.ceiling,
        threshold=args.threshold,
        bucket_by=args.bucket_by,
        workers=args.workers,
    )
    for aid, reason in rep.excluded:
        _err(f"excluded: {aid}: {reason}")
    for aid, reason in rep.advisories:
        _err(f"advisory: {aid}: {reason}")
    v = rep.verdict
    results = {
        "n_included": rep.n_included,
        "n_excluded": rep.n_excluded,
        "excluded": [{"athlete_id": a, "reason": r} for a, r in rep.excluded],
        "advisories": [{"athlete_id": a, "reason": r} for a, r in rep.advisories],
        "mean_transformed_lt_percent": rep.mean_transformed_lt,
        "ci": {"low": rep.ci[0], "high": rep.ci[1], "confidence": args.confidence, "method": "bca"},
        "summary": format_mean_ci(rep.mean_transformed_lt, rep.ci),
        "system_accuracy": rep.system_accuracy,
        "ceiling_accuracy": rep.ceiling_accuracy,
        "total_accuracy": rep.total_accuracy,
        "acceptance": {
            "threshold": v.threshold,
            "accuracy_gap": v.gap,
            "relative_accuracy": v.relative_accuracy,
            "passed": v.passed,
            "passed_absolute": v.passed_absolute,
            "ceiling_source": "precision" if prec else ("given" if args.ceiling is not None else "assumed_100"),
        },
        "residuals": rep.residuals,
    }
    if rep.precision is not None:
        results["precision"] = _precision_results(rep.precision)
    config = {
        "fraction": args.fraction,
        "threshold": args.threshold,
        "exclude": list(args.exclude),
        "degree": args.degree,
        "bca_resamples": args.bca_resamples,
        "confidence": args.confidence,
        "seed": seed,
        "measurement_sd": args.measurement_sd,
        "bootstrap": args.bootstrap if prec else None,
        "samples": args.samples if prec else None,
        "ceiling": args.ceiling,
        "bucket_by": args.bucket_by,
        "initial_speed": args.initial_speed,
    }
    d = _emit(args, "report", config, results)
    if d is not None:
        lio.write_rows(
            d / "residuals.csv",
            ["athlete_id", "reference_lt_kmh", "estimated_lt_kmh", "reference_pace_min_per_km",
             "transformed_lt_percent", "residual_s_per_km", "limit_s_per_km", "within"],
            [
                [r.athlete_id, r.reference_lt, r.estimated_lt, 60.0 / r.reference_lt,
                 rep.transformed_lts[r.athlete_id], r.residual, r.acceptable_limit, r.within]
                for r in rep.residuals
            ],
        )
        if rep.precision is not None:
            _write_error_samples(d / "error_samples.csv", rep.precision)
        if _figures_wanted(args, d):
            from .plots import plot_population_residuals, plot_precision_residuals

            plot_population_residuals(rep, d / "residuals.png")
            if rep.precision is not None:
                plot_precision_residuals(rep.precision, d / "precision_residuals.png")
    return EXIT_OK


def cmd_synth(args):
    seed = _seed(args)
    cfg = SynthConfig(
        n_athletes=args.athletes,
        points_per_athlete=args.points,
        lt_percent_mean=args.lt_mean,
        lt_percent_sd=args.lt_sd,
        curve_noise_sd=args.noise_sd,
        seed=seed,
        protocol=TestProtocol(initial_speed=args.initial_speed),
    )
    tests = generate_population(cfg)
    if args.out is None:
        lio.write_tests(tests, sys.stdout)
    else:
        lio.write_csv(tests, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lactate-lab", description="Lactate threshold estimation and Dmax precision.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        if needs_input:
            sp.add_argument("--input", required=True, help="long-format CSV")
            sp.add_argument("--out-dir", help="directory for JSON, CSV and figure files")
            sp.add_argument("--no-figures", action="store_true", help="skip PNG figures in --out-dir")
        sp.add_argument("--initial-speed", type=float, default=9.0, help="first stage speed, km/h")

    def precision_opts(sp):
        sp.add_argument("--measurement-sd", type=float, default=None, help="lactate device SD, mmol/L")
        sp.add_argument("--bootstrap", type=int, default=20)
        sp.add_argument("--samples", type=int, default=20)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--bucket-by", choices=["reference", "estimate"], default="reference")

    sp = sub.add_parser("estimate", help="heuristic LT from PTS")
    common(sp)
    sp.add_argument("--fraction", type=float, default=DEFAULT_FRACTION)
    sp.add_argument("--format", choices=["json", "text"], default="json")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("dmax", help="Dmax LT per athlete")
    common(sp)
    sp.add_argument("--degree", type=int, default=3)
    sp.add_argument("--exclude", nargs="*", default=[])
    sp.add_argument("--rss-threshold", type=float, default=2.0)
    sp.set_defaults(func=cmd_dmax)

    sp = sub.add_parser("precision", help="Monte Carlo Dmax precision")
    common(sp)
    precision_opts(sp)
    sp.add_argument("--degree", type=int, default=3)
    sp.add_argument("--seed", type=int, default=None)
    sp.set_defaults(func=cmd_precision)

    sp = sub.add_parser("report", help="population report for the heuristic")
    common(sp)
    precision_opts(sp)
    sp.add_argument("--degree", type=int, default=3)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--exclude", nargs="*", default=[])
    sp.add_argument("--threshold", type=float, default=SYSTEM_ACCEPTABLE_RATE)
    sp.add_argument("--fraction", type=float, default=DEFAULT_FRACTION)
    sp.add_argument("--ceiling", type=float, default=None, help="known ceiling accuracy, %%")
    sp.add_argument("--bca-resamples", type=int, default=DEFAULT_BCA_RESAMPLES)
    sp.add_argument("--confidence", type=float, default=0.95)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("synth", help="write a synthetic population CSV")
    common(sp, needs_input=False)
    sp.add_argument("--athletes", type=int, default=50)
    sp.add_argument("--points", type=int, default=8)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--lt-mean", type=float, default=59.6)
    sp.add_argument("--lt-sd", type=float, default=2.5)
    sp.add_argument("--noise-sd", type=float, default=0.05)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            # report warnings are echoed to stderr by the subcommands
            warnings.simplefilter("ignore", UserWarning)
            return args.func(args)
    except ConfigError as exc:
        _err(f"configuration error: {exc}")
        return EXIT_CONFIG
    except FormatError as exc:
        _err(f"format error: {exc}")
        return EXIT_INPUT
    except _InputError as exc:
        _err(f"input error: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        _err(f"input error: {exc}")
        return EXIT_INPUT
    except (DomainError, LactateLabError) as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
