"""Response tables and effect summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix, format_value
from .exceptions import InvalidInputError
from .snr import SnrVector


@dataclass(frozen=True)
class FactorResponse:
    """Level means, spread, and rank of one factor in a response table."""

    label: str
    name: str
    level_values: tuple
    level_means: tuple[float, ...]
    delta: float
    rank: int
    tied: bool


@dataclass(frozen=True)
class ResponseTable:
    """Per-factor level means of the SNR, ranked by delta (largest first).

    Equal deltas share the ordering of their factor labels and are flagged
    through ``tied`` / ``has_ties`` rather than silently broken.
    """

    metric: str
    factors: tuple[FactorResponse, ...]

    @property
    def has_ties(self) -> bool:
        return any(f.tied for f in self.factors)

    def factor(self, label: str) -> FactorResponse:
        for f in self.factors:
            if f.label == label:
                return f
        raise KeyError(label)

    @property
    def by_rank(self) -> tuple[FactorResponse, ...]:
        return tuple(sorted(self.factors, key=lambda f: f.rank))

    def to_csv_rows(self) -> list[list]:
        n_levels = max(len(f.level_means) for f in self.factors)
        head = ["factor", "name"] + [f"level_{i + 1}_mean" for i in range(n_levels)]
        out = [head + ["delta", "rank", "tied"]]
        for f in self.factors:
            means = list(f.level_means) + [None] * (n_levels - len(f.level_means))
            out.append([f.label, f.name] + means + [f.delta, f.rank, f.tied])
        return out

    def to_text(self) -> str:
        n_levels = max(len(f.level_means) for f in self.factors)
        header = f"{'Factor':<10}" + "".join(
            f"{'L' + str(i + 1):>10}" for i in range(n_levels)
        ) + f"{'Delta':>10}{'Rank':>6}"
        lines = [f"Response table ({self.metric} SNR, dB)", header]
        for f in self.factors:
            cells = "".join(f"{m:>10.3f}" for m in f.level_means)
            cells += "".join(" " * 10 for _ in range(n_levels - len(f.level_means)))
            tie = "*" if f.tied else ""
            lines.append(f"{f.label + ' ' + f.name:<10.10}{cells}{f.delta:>10.3f}{f.rank:>5}{tie}")
        if self.has_ties:
            lines.append("* rank tie broken by factor label order")
        return "\n".join(lines)


def response_table(design: DesignMatrix, snr: SnrVector) -> ResponseTable:
    """Tabulate mean SNR by factor level and rank factors by delta."""
    values = snr.as_array()
    if values.size != design.n_runs:
        raise InvalidInputError(f"{values.size} SNR values for {design.n_runs} runs")

    partial = []
    for f in design.factors:
        col = design.column_of(f.label)
        means = []
        for level in range(1, f.n_levels + 1):
            mask = col == level
            if not mask.any():
                raise InvalidInputError(f"factor {f.label}: level {level} has no runs")
            means.append(float(values[mask].mean()))
        delta = float(max(means) - min(means))
        partial.append((f, tuple(means), delta))

    order = sorted(partial, key=lambda item: (-item[2], item[0].label))
    rank_of = {f.label: i + 1 for i, (f, _, _) in enumerate(order)}
    deltas = [d for (_, _, d) in partial]

    factors = tuple(
        FactorResponse(
            label=f.label,
            name=f.name,
            level_values=f.levels,
            level_means=means,
            delta=delta,
            rank=rank_of[f.label],
            tied=deltas.count(delta) > 1,
        )
        for f, means, delta in partial
    )
    return ResponseTable(metric=snr.metric, factors=factors)


@dataclass(frozen=True)
class MainEffect:
    label: str
    name: str
    level_values: tuple
    level_counts: tuple[int, ...]
    level_means: tuple[float, ...]
    level_mean_snr: tuple[float, ...] | None


@dataclass(frozen=True)
class InteractionCell:
    value_a: object
    value_b: object
    count: int
    mean: float | None


@dataclass(frozen=True)
class InteractionEffect:
    label_a: str
    label_b: str
    cells: tuple[InteractionCell, ...]


@dataclass(frozen=True)
class EffectsData:
    """Main-effect and pairwise-interaction summaries of a response."""

    grand_mean: float
    main_effects: tuple[MainEffect, ...]
    interactions: tuple[InteractionEffect, ...]

    def main(self, label: str) -> MainEffect:
        for m in self.main_effects:
            if m.label == label:
                return m
        raise KeyError(label)

    def interaction(self, label_a: str, label_b: str) -> InteractionEffect:
        key = {label_a, label_b}
        for it in self.interactions:
            if {it.label_a, it.label_b} == key:
                return it
        raise KeyError(f"{label_a}x{label_b}")

    def main_effect_csv_rows(self) -> list[list]:
        out = [["factor", "name", "level", "count", "mean", "mean_snr"]]
        for m in self.main_effects:
            for v, c, mean, s in zip(
                m.level_values,
                m.level_counts,
                m.level_means,
                m.level_mean_snr or [None] * len(m.level_values),
            ):
                out.append([m.label, m.name, format_value(v), c, mean, s])
        return out

    def interaction_csv_rows(self) -> list[list]:
        out = [["factor_a", "level_a", "factor_b", "level_b", "count", "mean"]]
        for it in self.interactions:
            for cell in it.cells:
                out.append(
                    [
                        it.label_a,
                        format_value(cell.value_a),
                        it.label_b,
                        format_value(cell.value_b),
                        cell.count,
                        cell.mean,
                    ]
                )
        return out


def effects(design: DesignMatrix, values, snr: SnrVector | None = None) -> EffectsData:
    """Summarize level means and pairwise cell means of a response.

    ``values`` holds one response per run.  When an aligned ``snr`` vector
    is supplied, main effects also carry the SNR mean per level.  Empty
    interaction cells (possible on fractional designs) are kept with
    ``count=0, mean=None`` so the caller can see the coverage.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size != design.n_runs:
        raise InvalidInputError(f"{v.size} values for {design.n_runs} runs")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("response values must be finite")
    s = None
    if snr is not None:
        s = snr.as_array()
        if s.size != design.n_runs:
            raise InvalidInputError(f"{s.size} SNR values for {design.n_runs} runs")

    mains = []
    for f in design.factors:
        col = design.column_of(f.label)
        counts, means, snr_means = [], [], []
        for level in range(1, f.n_levels + 1):
            mask = col == level
            n_l = int(np.count_nonzero(mask))
            counts.append(n_l)
            means.append(float(v[mask].mean()) if n_l else float("nan"))
            if s is not None:
                snr_means.append(float(s[mask].mean()) if n_l else float("nan"))
        mains.append(
            MainEffect(
                label=f.label,
                name=f.name,
                level_values=f.levels,
                level_counts=tuple(counts),
                level_means=tuple(means),
                level_mean_snr=tuple(snr_means) if s is not None else None,
            )
        )

    interactions = []
    n = design.n_factors
    for i in range(n):
        for j in range(i + 1, n):
            fa, fb = design.factors[i], design.factors[j]
            col_a, col_b = design.column_of(fa.label), design.column_of(fb.label)
            cells = []
            for la in range(1, fa.n_levels + 1):
                for lb in range(1, fb.n_levels + 1):
                    mask = (col_a == la) & (col_b == lb)
                    count = int(np.count_nonzero(mask))
                    cells.append(
                        InteractionCell(
                            value_a=fa.value(la),
                            value_b=fb.value(lb),
                            count=count,
                            mean=float(v[mask].mean()) if count else None,
                        )
                    )
            interactions.append(
                InteractionEffect(label_a=fa.label, label_b=fb.label, cells=tuple(cells))
            )

    return EffectsData(
        grand_mean=float(v.mean()),
        main_effects=tuple(mains),
        interactions=tuple(interactions),
    )
