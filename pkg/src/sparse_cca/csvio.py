"""Plain numeric CSV in and out.

Floats are written with ``repr``, the shortest string that parses back to
the same double.  Line endings are always LF.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import InputError
from .experiments import CurveTable
from .greedy import SparsityPath
from .oracle import OraclePoint

PATH_COLUMNS = ("step", "side", "index", "card_I", "card_J", "rho", "bound_value")
WEIGHT_COLUMNS = ("step", "side", "variable_index", "weight")
CURVE_COLUMNS = ("total_cardinality", "method", "mode", "mean_rho", "std_rho", "trials")


def read_matrix(path: str | Path, header: bool = False) -> np.ndarray:
    """Read a rectangular numeric CSV into a 2-D float array."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    if header:
        rows = rows[1:]
    offset = 2 if header else 1
    rows = [(k + offset, r) for k, r in enumerate(rows) if any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0][1])
    out = []
    for lineno, row in rows:
        if len(row) != width:
            raise InputError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
        try:
            out.append([float(c) for c in row])
        except ValueError as exc:
            raise InputError(f"{path}: row {lineno}: {exc}") from exc
    return np.array(out)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows(fh: IO[str], header: Iterable[str], rows: Iterable[Iterable]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def path_rows(path: SparsityPath):
    for e in path.entries:
        yield (
            e.step, e.side, e.index, len(e.pattern.I), len(e.pattern.J), e.rho, e.bound_value
        )


def weight_rows(steps_and_solutions):
    for step, sol in steps_and_solutions:
        for i, w in zip(sol.pattern.I, sol.a):
            yield step, "X", i, w
        for j, w in zip(sol.pattern.J, sol.b):
            yield step, "Y", j, w


def write_path(fh: IO[str], path: SparsityPath) -> None:
    write_rows(fh, PATH_COLUMNS, path_rows(path))


def write_path_weights(fh: IO[str], path: SparsityPath) -> None:
    write_rows(fh, WEIGHT_COLUMNS, weight_rows((e.step, e.solution) for e in path.entries))


def write_oracle_curve(fh: IO[str], points: list[OraclePoint]) -> None:
    """Oracle curve in the path layout; side, index and bound are empty."""
    write_rows(
        fh,
        PATH_COLUMNS,
        ((t, None, None, p.k_a, p.k_b, p.rho, None) for t, p in enumerate(points)),
    )


def write_oracle_weights(fh: IO[str], points: list[OraclePoint]) -> None:
    write_rows(fh, WEIGHT_COLUMNS, weight_rows(enumerate(p.solution for p in points)))


def write_curve_table(fh: IO[str], table: CurveTable) -> None:
    write_rows(
        fh,
        CURVE_COLUMNS,
        (
            (r.total_cardinality, r.method, r.mode, r.mean_rho, r.std_rho, r.trials)
            for r in table.rows
        ),
    )


def read_curve_table(path: str | Path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
