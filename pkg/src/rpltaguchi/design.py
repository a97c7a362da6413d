"""Factors, design matrices, and their CSV round trip."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .arrays import OrthogonalArray
from .exceptions import InvalidDesignError, InvalidInputError, UnknownFactorError


@dataclass(frozen=True)
class Factor:
    """One controllable factor with a short label and ordered levels.

    Parameters
    ----------
    label : str
        Column heading, e.g. ``"A"``.
    name : str
        Descriptive name, e.g. ``"network_size"``.
    levels : tuple
        Numeric level values in level-index order (index 1 first).
    """

    label: str
    name: str
    levels: tuple

    def __post_init__(self):
        if not self.label:
            raise InvalidDesignError("factor label must be non-empty")
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 2:
            raise InvalidDesignError(f"factor {self.label}: needs at least 2 levels")
        if len(set(levels)) != len(levels):
            raise InvalidDesignError(f"factor {self.label}: duplicate level values")
        for v in levels:
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise InvalidDesignError(f"factor {self.label}: level {v!r} is not a finite number")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def value(self, level_index: int):
        """Level value for a 1-based level index."""
        if not 1 <= level_index <= len(self.levels):
            raise InvalidDesignError(
                f"factor {self.label}: level index {level_index} out of range 1..{len(self.levels)}"
            )
        return self.levels[level_index - 1]

    def level_index(self, value) -> int:
        """Inverse of :meth:`value`; exact match required."""
        for i, v in enumerate(self.levels, start=1):
            if v == value:
                return i
        raise InvalidDesignError(f"factor {self.label}: {value!r} is not one of {self.levels}")


class DesignPoint(NamedTuple):
    index: int
    values: tuple


def format_value(v) -> str:
    """Render a level value or response compactly (``20`` not ``20.0``)."""
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return repr(v) if isinstance(v, float) else str(v)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """An ordered set of runs assigning one level index per factor.

    ``level_indices`` holds 1-based level indices with shape
    ``(n_runs, n_factors)``.  When built from a catalog array, ``array``
    and ``assignment`` (factor label -> 1-based array column) record the
    provenance; designs read back from CSV carry ``array=None``.
    """

    factors: tuple[Factor, ...]
    level_indices: np.ndarray
    array: OrthogonalArray | None = None
    assignment: dict | None = None

    def __post_init__(self):
        factors = tuple(self.factors)
        object.__setattr__(self, "factors", factors)
        labels = [f.label for f in factors]
        if len(set(labels)) != len(labels):
            raise InvalidDesignError(f"duplicate factor labels in {labels}")
        idx = np.asarray(self.level_indices, dtype=np.int64)
        if idx.ndim != 2 or idx.shape[1] != len(factors):
            raise InvalidDesignError(
                f"level_indices shape {idx.shape} does not match {len(factors)} factors"
            )
        if idx.shape[0] == 0:
            raise InvalidDesignError("design has no runs")
        for j, f in enumerate(factors):
            col = idx[:, j]
            if col.min() < 1 or col.max() > f.n_levels:
                raise InvalidDesignError(
                    f"factor {f.label}: level index outside 1..{f.n_levels}"
                )
        idx.setflags(write=False)
        object.__setattr__(self, "level_indices", idx)

    @classmethod
    def from_array(cls, factors, array: OrthogonalArray, assignment=None) -> "DesignMatrix":
        """Assign factors to array columns (defaults to columns 1..n in order)."""
        factors = tuple(factors)
        if assignment is None:
            assignment = {f.label: i + 1 for i, f in enumerate(factors)}
        missing = [f.label for f in factors if f.label not in assignment]
        if missing:
            raise InvalidDesignError(f"assignment missing columns for {missing}")
        cols = [assignment[f.label] for f in factors]
        if len(set(cols)) != len(cols):
            raise InvalidDesignError(f"assignment maps two factors to one column: {assignment}")
        for f in factors:
            if f.n_levels != array.levels:
                raise InvalidDesignError(
                    f"factor {f.label} has {f.n_levels} levels but {array.name} "
                    f"columns carry {array.levels}"
                )
        for c in cols:
            if not 1 <= c <= array.columns:
                raise InvalidDesignError(f"column {c} out of range 1..{array.columns}")
        idx = np.column_stack([array.column(c) for c in cols])
        return cls(factors=factors, level_indices=idx, array=array, assignment=dict(assignment))

    @classmethod
    def from_values(cls, factors, value_rows) -> "DesignMatrix":
        """Build a design from explicit level values (one row per run)."""
        factors = tuple(factors)
        idx_rows = []
        for r, row in enumerate(value_rows, start=1):
            row = tuple(row)
            if len(row) != len(factors):
                raise InvalidDesignError(f"run {r}: {len(row)} values for {len(factors)} factors")
            idx_rows.append([f.level_index(v) for f, v in zip(factors, row)])
        return cls(factors=factors, level_indices=np.asarray(idx_rows, dtype=np.int64))

    @property
    def n_runs(self) -> int:
        return int(self.level_indices.shape[0])

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.factors)

    def factor(self, label: str) -> Factor:
        for f in self.factors:
            if f.label == label:
                return f
        raise UnknownFactorError(label)

    def column_of(self, label: str) -> np.ndarray:
        """Level indices of one factor across all runs."""
        for j, f in enumerate(self.factors):
            if f.label == label:
                return self.level_indices[:, j]
        raise UnknownFactorError(label)

    def value_rows(self) -> list[tuple]:
        rows = []
        for i in range(self.n_runs):
            rows.append(
                tuple(
                    f.value(int(self.level_indices[i, j]))
                    for j, f in enumerate(self.factors)
                )
            )
        return rows

    @property
    def points(self) -> list[DesignPoint]:
        """Runs as (1-based index, level values) in run order."""
        return [DesignPoint(i + 1, vals) for i, vals in enumerate(self.value_rows())]


def check_responses(design: DesignMatrix, responses) -> np.ndarray:
    """Validate a response block against a design.

    Accepts one value per run or an ``(n_runs, r)`` block; returns a 2-D
    float array.  Misalignment or non-finite entries raise
    :class:`InvalidInputError`.
    """
    y = np.asarray(responses, dtype=float)
    if y.ndim == 1:
        y = y[:, np.newaxis]
    if y.ndim != 2 or y.shape[0] != design.n_runs:
        raise InvalidInputError(
            f"responses shape {y.shape} does not align with {design.n_runs} runs"
        )
    if y.shape[1] < 1:
        raise InvalidInputError("responses need at least one repetition column")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError("responses contain non-finite values")
    return y


def write_design_csv(design: DesignMatrix, fp) -> None:
    """Write the design as CSV: header of factor labels, one run per row."""
    writer = csv.writer(fp)
    writer.writerow(design.labels)
    for row in design.value_rows():
        writer.writerow([format_value(v) for v in row])


def write_response_csv(design: DesignMatrix, responses, fp) -> None:
    """Write design plus responses: labels then ``y_1..y_r`` columns."""
    y = check_responses(design, responses)
    writer = csv.writer(fp)
    writer.writerow(list(design.labels) + [f"y_{k + 1}" for k in range(y.shape[1])])
    for row, yrow in zip(design.value_rows(), y):
        writer.writerow([format_value(v) for v in row] + [repr(float(v)) for v in yrow])


def read_response_csv(fp, factors=None) -> tuple[DesignMatrix, np.ndarray]:
    """Read a CSV written by :func:`write_response_csv`.

    Without explicit ``factors``, the factor columns are every header field
    before the first ``y_*`` column and their levels are inferred as the
    sorted distinct values seen.
    """
    rows = list(csv.reader(fp))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise InvalidInputError("response CSV needs a header and at least one run")
    header = [h.strip() for h in rows[0]]
    y_start = next((i for i, h in enumerate(header) if h.startswith("y_")), None)
    if y_start is None or y_start == 0:
        raise InvalidInputError("response CSV header needs factor columns then y_1..y_r")
    labels = header[:y_start]
    try:
        values = [[float(cell) for cell in row] for row in rows[1:]]
    except ValueError as exc:
        raise InvalidInputError(f"non-numeric cell in response CSV: {exc}") from None
    for r, row in enumerate(values, start=2):
        if len(row) != len(header):
            raise InvalidInputError(f"line {r}: {len(row)} cells for {len(header)} columns")
    value_rows = [tuple(row[:y_start]) for row in values]
    y = np.asarray([row[y_start:] for row in values], dtype=float)

    if factors is None:
        factors = []
        for j, label in enumerate(labels):
            seen = sorted({row[j] for row in value_rows})
            canonical = tuple(int(v) if float(v).is_integer() else v for v in seen)
            factors.append(Factor(label=label, name=label, levels=canonical))
    else:
        factors = tuple(factors)
        if tuple(f.label for f in factors) != tuple(labels):
            raise InvalidInputError(
                f"CSV factor columns {labels} do not match spec labels "
                f"{[f.label for f in factors]}"
            )
    canonical_rows = [
        tuple(int(v) if float(v).is_integer() else v for v in row) for row in value_rows
    ]
    design = DesignMatrix.from_values(factors, canonical_rows)
    check_responses(design, y)
    return design, y


def design_to_csv_text(design: DesignMatrix) -> str:
    buf = io.StringIO()
    write_design_csv(design, buf)
    return buf.getvalue()
