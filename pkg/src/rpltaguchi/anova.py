"""Sum-of-squares decomposition and F testing over a design matrix.

The decomposition is the classic one for balanced orthogonal designs:
factor SS from level-mean deviations weighted by cell counts, residual SS
by subtraction.  Unbalanced designs (e.g. a design with failed runs
dropped) are accepted; the factor terms then overlap and the residual is
best-effort, which callers flag rather than forbid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .design import DesignMatrix, check_responses
from .exceptions import (
    DecompositionError,
    InvalidDesignError,
    InvalidInputError,
    SaturatedDesignError,
    UndefinedContributionError,
)

#: |ss_total - sum(factor ss) - ss_error| below this (scaled) is treated as zero.
DECOMPOSITION_TOL = 1e-9


def _as_values(values) -> np.ndarray:
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise InvalidInputError("need at least 2 response values")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("response values must be finite")
    return v


def total_sum_squares(values) -> float:
    """Sum of squared deviations from the grand mean."""
    v = _as_values(values)
    return float(np.sum(np.square(v - v.mean())))


def factor_sum_squares(design: DesignMatrix, values, label: str) -> float:
    """Between-level sum of squares for one factor.

    Level means are weighted by their cell counts, so the identity
    ``ss_total = sum(factor ss) + ss_error`` holds exactly on balanced
    orthogonal designs.
    """
    v = _as_values(values)
    if v.size != design.n_runs:
        raise InvalidInputError(f"{v.size} values for {design.n_runs} runs")
    col = design.column_of(label)
    grand = v.mean()
    ss = 0.0
    for level in range(1, design.factor(label).n_levels + 1):
        mask = col == level
        n_l = int(np.count_nonzero(mask))
        if n_l == 0:
            continue
        ss += n_l * (v[mask].mean() - grand) ** 2
    return float(ss)


def error_sum_squares(ss_total: float, factor_ss) -> float:
    """Residual SS by subtraction, clamped to zero within tolerance."""
    explained = float(sum(factor_ss))
    diff = ss_total - explained
    tol = DECOMPOSITION_TOL * max(1.0, abs(ss_total))
    if diff < -tol:
        raise DecompositionError(
            f"factor SS {explained} exceeds total {ss_total} beyond tolerance"
        )
    if abs(diff) <= tol:
        return 0.0
    return diff


def percent_contribution(factor_ss: float, ss_total: float) -> float:
    """Share of the total variation explained by one factor, in percent."""
    if ss_total <= 0.0:
        raise UndefinedContributionError("total SS is zero: contribution undefined")
    if factor_ss < 0.0:
        raise InvalidInputError("factor SS must be >= 0")
    return 100.0 * factor_ss / ss_total


def f_value(factor_ss: float, factor_df: int, error_ss: float, error_df: int) -> float:
    """Variance ratio ``(factor_ss/factor_df) / (error_ss/error_df)``.

    A zero residual with positive factor SS yields ``math.inf`` as the
    infinite-F signal; a saturated design (no residual df) raises.
    """
    if factor_df < 1:
        raise InvalidInputError("factor df must be >= 1")
    if error_df < 1:
        raise SaturatedDesignError("no residual degrees of freedom")
    if factor_ss < 0.0 or error_ss < 0.0:
        raise InvalidInputError("sums of squares must be >= 0")
    if error_ss == 0.0:
        return math.inf if factor_ss > 0.0 else 0.0
    return (factor_ss / factor_df) / (error_ss / error_df)


def f_p_value(f: float, df1: int, df2: int) -> float:
    """Upper-tail probability of the F(df1, df2) distribution at ``f``.

    Computed through the regularized incomplete beta function:
    ``I_x(df2/2, df1/2)`` at ``x = df2 / (df2 + df1*f)``.
    """
    if df1 < 1 or df2 < 1:
        raise InvalidInputError("degrees of freedom must be >= 1")
    if math.isnan(f) or f < 0.0:
        raise InvalidInputError(f"F statistic must be >= 0, got {f}")
    if math.isinf(f):
        return 0.0
    if f == 0.0:
        return 1.0
    x = df2 / (df2 + df1 * f)
    return float(special.betainc(df2 / 2.0, df1 / 2.0, x))


@dataclass(frozen=True)
class AnovaRow:
    label: str
    name: str
    df: int
    seq_ss: float
    adj_ms: float | None
    f: float | None
    p: float | None
    contribution_pct: float | None


@dataclass(frozen=True)
class AnovaTable:
    """Factor rows (ordered by label) plus the error and total lines.

    ``zero_variance`` marks an all-equal response vector: the SS column is
    zero everywhere and F, p, and contributions are undefined (None).
    A saturated design (``error_df == 0``) likewise reports F and p as
    None while keeping the decomposition.
    """

    rows: tuple[AnovaRow, ...]
    error_df: int
    error_ss: float
    error_ms: float | None
    total_df: int
    total_ss: float
    zero_variance: bool

    @property
    def saturated(self) -> bool:
        return self.error_df == 0

    def row(self, label: str) -> AnovaRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_csv_rows(self) -> list[list]:
        out = [["source", "name", "df", "seq_ss", "adj_ms", "f", "p", "contribution_pct"]]
        for r in self.rows:
            out.append(
                [r.label, r.name, r.df, r.seq_ss, r.adj_ms, r.f, r.p, r.contribution_pct]
            )
        out.append(["Error", "", self.error_df, self.error_ss, self.error_ms, None, None, None])
        out.append(["Total", "", self.total_df, self.total_ss, None, None, None, None])
        return out

    def to_text(self) -> str:
        def fmt(x, nd):
            if x is None:
                return "-"
            if isinstance(x, float) and math.isinf(x):
                return "inf"
            return f"{x:.{nd}f}"

        header = f"{'Source':<10}{'DF':>4}{'Seq SS':>12}{'Adj MS':>12}{'F':>10}{'P':>8}{'Pct':>8}"
        lines = [header]
        for r in self.rows:
            lines.append(
                f"{r.label + ' ' + r.name:<10.10}{r.df:>4}{fmt(r.seq_ss, 4):>12}"
                f"{fmt(r.adj_ms, 4):>12}{fmt(r.f, 2):>10}{fmt(r.p, 3):>8}{fmt(r.contribution_pct, 2):>8}"
            )
        lines.append(
            f"{'Error':<10}{self.error_df:>4}{fmt(self.error_ss, 4):>12}{fmt(self.error_ms, 4):>12}"
            f"{'':>10}{'':>8}{'':>8}"
        )
        lines.append(
            f"{'Total':<10}{self.total_df:>4}{fmt(self.total_ss, 4):>12}{'':>12}{'':>10}{'':>8}{'':>8}"
        )
        if self.zero_variance:
            lines.append("note: zero-variance responses; F, P and contributions undefined")
        elif self.saturated:
            lines.append("note: saturated design; no residual df for F tests")
        return "\n".join(lines)


def anova(design: DesignMatrix, values) -> AnovaTable:
    """Decompose response variation over the design's factors.

    ``values`` carries one number per design point (already aggregated
    across repetitions by the caller, in whichever space the analysis is
    meant to run).
    """
    v = _as_values(values)
    if v.size != design.n_runs:
        raise InvalidInputError(f"{v.size} values for {design.n_runs} runs")

    total_df = v.size - 1
    factor_df = {f.label: f.n_levels - 1 for f in design.factors}
    error_df = total_df - sum(factor_df.values())
    if error_df < 0:
        raise InvalidDesignError(
            f"factors carry {sum(factor_df.values())} df but only {total_df} are available"
        )

    ss_total = total_sum_squares(v)
    zero_variance = ss_total <= 1e-20 * max(1.0, float(np.sum(np.square(v))))
    ss_by_factor = {f.label: factor_sum_squares(design, v, f.label) for f in design.factors}
    ss_error = error_sum_squares(ss_total, ss_by_factor.values())
    ms_error = ss_error / error_df if error_df > 0 else None

    rows = []
    for f in sorted(design.factors, key=lambda f: f.label):
        df = factor_df[f.label]
        ss = ss_by_factor[f.label]
        ms = ss / df
        if zero_variance or error_df == 0:
            f_stat, p, pct = None, None, None
        else:
            f_stat = f_value(ss, df, ss_error, error_df)
            p = f_p_value(f_stat, df, error_df)
            pct = percent_contribution(ss, ss_total)
        rows.append(
            AnovaRow(
                label=f.label,
                name=f.name,
                df=df,
                seq_ss=ss,
                adj_ms=ms,
                f=f_stat,
                p=p,
                contribution_pct=pct,
            )
        )
    return AnovaTable(
        rows=tuple(rows),
        error_df=error_df,
        error_ss=ss_error,
        error_ms=ms_error,
        total_df=total_df,
        total_ss=ss_total,
        zero_variance=bool(zero_variance),
    )
