"""CSV ingestion and JSON/CSV serialisation."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .core import AthleteTest, Finding, LactatePoint, TestProtocol, validate_test
from .errors import FormatError

HEADER = ("athlete_id", "stage_speed_kmh", "lactate_mmol_per_l", "pts_kmh")
SCHEMA_VERSION = "1"


def _number(text: str, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"line {line}: {column} is not a number: {text!r}") from None


def read_tests(
    stream: TextIO, protocol: TestProtocol | None = None, min_points: int = 4
) -> tuple[list[AthleteTest], list[Finding]]:
    protocol = protocol or TestProtocol()
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty file") from None
    if tuple(h.strip() for h in header) != HEADER:
        raise FormatError(f"header must be {','.join(HEADER)}; got {','.join(header)}")

    rows: dict[str, list[tuple[float, float]]] = {}
    pts_seen: dict[str, list[float]] = {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(HEADER):
            raise FormatError(f"line {line}: expected {len(HEADER)} columns, got {len(row)}")
        aid = row[0].strip()
        if not aid:
            raise FormatError(f"line {line}: empty athlete_id")
        speed = _number(row[1], line, HEADER[1])
        lactate = _number(row[2], line, HEADER[2])
        pts = _number(row[3], line, HEADER[3])
        rows.setdefault(aid, []).append((speed, lactate))
        pts_seen.setdefault(aid, []).append(pts)

    tests, findings = [], []
    for aid, pairs in rows.items():
        pts_values = pts_seen[aid]
        test = AthleteTest(aid, tuple(LactatePoint(s, c) for s, c in pairs), pts_values[0], protocol)
        if any(p != pts_values[0] for p in pts_values):
            findings.append(Finding(aid, "pts", "inconsistent PTS"))
        findings.extend(validate_test(test, min_points))
        tests.append(test)
    return tests, findings


def parse_csv(
    path, protocol: TestProtocol | None = None, min_points: int = 4
) -> tuple[list[AthleteTest], list[Finding]]:
    """Read a long-format CSV (one row per lactate point) into tests plus findings."""
    with open(path, newline="", encoding="utf-8") as fh:
        return read_tests(fh, protocol, min_points)


def write_tests(tests: Iterable[AthleteTest], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HEADER)
    for t in tests:
        for p in t.points:
            writer.writerow([t.athlete_id, repr(float(p.stage_speed)), repr(float(p.concentration)), repr(float(t.pts))])


def write_csv(tests: Iterable[AthleteTest], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_tests(tests, fh)


def tests_to_csv(tests: Iterable[AthleteTest]) -> str:
    buf = io.StringIO()
    write_tests(tests, buf)
    return buf.getvalue()


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def to_jsonable(obj):
    """Convert dataclasses, numpy scalars and tuples into plain JSON types.

    Non-finite floats become ``null``.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def render_document(command: str, config: dict, results) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": to_jsonable(config),
        "results": to_jsonable(results),
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"
