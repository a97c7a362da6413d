"""Orthogonal array catalog, selection, and balance verification.

The catalog arrays are generated from linear forms over GF(3): every column
of L9 (resp. L27) evaluates one representative of a distinct line through
the origin of GF(3)^2 (resp. GF(3)^3) on the lexicographically enumerated
base points.  Any two such columns are jointly balanced, which is what
``verify_orthogonality`` checks by brute force.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidDesignError, NoFeasibleArrayError


@dataclass(frozen=True, eq=False)
class OrthogonalArray:
    """A named orthogonal array with 1-based level cells.

    Attributes
    ----------
    name : str
        Catalog name, e.g. ``"L27"``.
    levels : int
        Level arity shared by every column.
    cells : numpy.ndarray
        ``(runs, columns)`` array of level indices in ``1..levels``.
        Columns are addressed 1-based throughout the public API, matching
        the customary tabulation of these arrays.
    """

    name: str
    levels: int
    cells: np.ndarray

    @property
    def runs(self) -> int:
        return int(self.cells.shape[0])

    @property
    def columns(self) -> int:
        return int(self.cells.shape[1])

    def column(self, index: int) -> np.ndarray:
        """Return one column (1-based index) as a vector of level indices."""
        if not 1 <= index <= self.columns:
            raise ValueError(
                f"column {index} out of range 1..{self.columns} for {self.name}"
            )
        return self.cells[:, index - 1]

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"OrthogonalArray({self.name}, {self.runs}x{self.columns}, {self.levels} levels)"


def _linear_array(name: str, levels: int, base: int, exponents) -> OrthogonalArray:
    # Rows enumerate GF(levels)^base with the first coordinate slowest.
    rows = list(itertools.product(range(levels), repeat=base))
    cells = np.empty((len(rows), len(exponents)), dtype=np.int64)
    for j, exp in enumerate(exponents):
        for i, point in enumerate(rows):
            cells[i, j] = sum(e * x for e, x in zip(exp, point)) % levels + 1
    cells.setflags(write=False)
    return OrthogonalArray(name=name, levels=levels, cells=cells)


# One representative per line through the origin; the representatives for the
# two mixed uv-columns are chosen so that assigning factors to the first
# columns in order reproduces the customary printed tables cell by cell.
_L9_FORMS = ((1, 0), (0, 1), (1, 1), (2, 1))
_L27_FORMS = (
    (1, 0, 0),
    (0, 1, 0),
    (1, 1, 0),
    (2, 1, 0),
    (0, 0, 1),
    (1, 0, 1),
    (2, 0, 1),
    (0, 1, 1),
    (0, 2, 1),
    (1, 1, 1),
    (2, 1, 1),
    (1, 2, 1),
    (2, 2, 1),
)

L9 = _linear_array("L9", 3, 2, _L9_FORMS)
L27 = _linear_array("L27", 3, 3, _L27_FORMS)

#: Catalog searched by :func:`select_array`, smallest first.
STANDARD_CATALOG: tuple[OrthogonalArray, ...] = (L9, L27)


def get_array(name: str) -> OrthogonalArray:
    """Look up a catalog array by name (case-insensitive)."""
    for array in STANDARD_CATALOG:
        if array.name.lower() == name.lower():
            return array
    known = ", ".join(a.name for a in STANDARD_CATALOG)
    raise NoFeasibleArrayError(f"unknown array {name!r}; catalog has {known}")


def min_runs(factors) -> int:
    """Minimum run count for the factor set: ``1 + sum(levels_i - 1)``.

    Parameters
    ----------
    factors : sequence of Factor
        Factors under study; each contributes its level count.
    """
    factors = list(factors)
    if not factors:
        raise InvalidDesignError("cannot size a design with no factors")
    return 1 + sum(len(f.levels) - 1 for f in factors)


def select_array(factors, catalog=STANDARD_CATALOG) -> OrthogonalArray:
    """Pick the smallest catalog array that can host the factors.

    A candidate must share the factors' level arity, offer at least
    ``min_runs(factors)`` runs, and have a column per factor.  Ties are
    broken by fewer runs, then fewer columns, then name.
    """
    factors = list(factors)
    need = min_runs(factors)
    arities = {len(f.levels) for f in factors}
    if len(arities) != 1:
        raise InvalidDesignError(
            f"mixed level counts {sorted(arities)}: catalog arrays host a single arity"
        )
    arity = arities.pop()
    candidates = [
        a
        for a in catalog
        if a.levels == arity and a.runs >= need and a.columns >= len(factors)
    ]
    if not candidates:
        raise NoFeasibleArrayError(
            f"no catalog array with {arity}-level columns, >= {need} runs "
            f"and >= {len(factors)} columns"
        )
    return min(candidates, key=lambda a: (a.runs, a.columns, a.name))


@dataclass(frozen=True)
class BalanceReport:
    """Outcome of a pairwise balance audit of selected columns."""

    array_name: str
    columns: tuple[int, ...]
    passed: bool
    failures: tuple[str, ...]

    def to_text(self) -> str:
        lines = [
            f"array {self.array_name}, columns {', '.join(map(str, self.columns))}: "
            + ("balanced" if self.passed else "NOT balanced")
        ]
        lines.extend(f"  {msg}" for msg in self.failures)
        return "\n".join(lines)


def verify_orthogonality(array: OrthogonalArray, used_columns=None) -> BalanceReport:
    """Audit single-column and pairwise level balance by exhaustive count.

    Every used column must carry each level exactly ``runs/levels`` times,
    and every ordered pair of used columns must carry each level pair
    exactly ``runs/levels**2`` times.
    """
    if used_columns is None:
        used_columns = tuple(range(1, array.columns + 1))
    else:
        used_columns = tuple(used_columns)
        for c in used_columns:
            if not 1 <= c <= array.columns:
                raise ValueError(f"column {c} out of range 1..{array.columns}")
        if len(set(used_columns)) != len(used_columns):
            raise ValueError("used_columns contains duplicates")

    failures: list[str] = []
    per_level = array.runs // array.levels
    per_pair = array.runs // array.levels**2
    levels = range(1, array.levels + 1)

    for c in used_columns:
        col = array.column(c)
        for lv in levels:
            count = int(np.count_nonzero(col == lv))
            if count != per_level:
                failures.append(f"column {c}: level {lv} appears {count}x, expected {per_level}x")
    for ca, cb in itertools.combinations(used_columns, 2):
        col_a, col_b = array.column(ca), array.column(cb)
        for la in levels:
            for lb in levels:
                count = int(np.count_nonzero((col_a == la) & (col_b == lb)))
                if count != per_pair:
                    failures.append(
                        f"columns ({ca},{cb}): pair ({la},{lb}) appears {count}x, expected {per_pair}x"
                    )
    return BalanceReport(
        array_name=array.name,
        columns=used_columns,
        passed=not failures,
        failures=tuple(failures),
    )
