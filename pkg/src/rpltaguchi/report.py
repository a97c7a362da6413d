"""Analysis reports: build, render, export, reload, and verification.

Nothing here touches the simulator, so report generation and the
``verify-paper`` gate work in a build without the simulator module.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from ._version import __version__
from .anova import AnovaRow, AnovaTable, anova
from .arrays import get_array
from .design import DesignMatrix, Factor, write_design_csv, write_response_csv
from .exceptions import InvalidInputError
from .experiment import ExperimentSpec
from .fixtures import (
    P_ZERO_AT_3DP,
    REFERENCE_ANOVA,
    REFERENCE_ANOVA_ERROR,
    REFERENCE_ANOVA_TOTAL,
    REFERENCE_DESIGN_ROWS,
    REFERENCE_FACTORS,
    REFERENCE_POWER_MW,
    REFERENCE_RESPONSE_TABLE,
    TOL_F,
    TOL_F_SMALL,
    TOL_MS,
    TOL_P,
    TOL_SNR_DELTA,
    TOL_SNR_MEAN,
    TOL_SS,
)
from .snr import SnrVector, snr_vector
from .tables import (
    EffectsData,
    FactorResponse,
    InteractionCell,
    InteractionEffect,
    MainEffect,
    ResponseTable,
    effects,
    response_table,
)


@dataclass(frozen=True)
class Verdict:
    label: str
    name: str
    p: float | None
    significant: bool | None
    statement: str


@dataclass(frozen=True)
class Report:
    """Everything a completed analysis produced, ready to render or save."""

    anova_space: str
    snr_metric: str
    alpha: float
    design: DesignMatrix
    responses: tuple
    mean_responses: tuple
    snr: SnrVector
    anova: AnovaTable
    response_table: ResponseTable
    effects: EffectsData
    verdicts: tuple
    gaps: tuple
    provenance: dict

    def to_text(self) -> str:
        lines = ["Experiment report", "=" * 17, ""]
        for key in sorted(self.provenance):
            lines.append(f"{key}: {self.provenance[key]}")
        lines.append(f"points analyzed: {len(self.mean_responses)}")
        if self.gaps:
            lines.append(
                f"WARNING: design points {list(self.gaps)} failed to simulate; "
                "the analysis below covers the remaining points only"
            )
        lines += ["", f"ANOVA ({self.anova_space} space)", self.anova.to_text(), ""]
        lines += [self.response_table.to_text(), ""]
        lines.append(f"Verdicts (alpha={self.alpha:g})")
        for v in self.verdicts:
            lines.append(f"  {v.statement}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "anova_space": self.anova_space,
            "snr_metric": self.snr_metric,
            "alpha": self.alpha,
            "design": _design_to_dict(self.design),
            "responses": [list(row) for row in self.responses],
            "mean_responses": list(self.mean_responses),
            "snr": {"metric": self.snr.metric, "values": list(self.snr.values)},
            "anova": _anova_to_dict(self.anova),
            "response_table": _rtable_to_dict(self.response_table),
            "effects": _effects_to_dict(self.effects),
            "verdicts": [
                {
                    "label": v.label,
                    "name": v.name,
                    "p": v.p,
                    "significant": v.significant,
                    "statement": v.statement,
                }
                for v in self.verdicts
            ],
            "gaps": list(self.gaps),
            "provenance": dict(self.provenance),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _design_to_dict(design: DesignMatrix) -> dict:
    return {
        "factors": [
            {"label": f.label, "name": f.name, "levels": list(f.levels)}
            for f in design.factors
        ],
        "array": design.array.name if design.array is not None else None,
        "assignment": dict(design.assignment) if design.assignment is not None else None,
        "rows": [list(row) for row in design.value_rows()],
    }


def _design_from_dict(d: dict) -> DesignMatrix:
    factors = tuple(
        Factor(f["label"], f["name"], tuple(f["levels"])) for f in d["factors"]
    )
    if d.get("array"):
        return DesignMatrix.from_array(factors, get_array(d["array"]), d.get("assignment"))
    return DesignMatrix.from_values(factors, [tuple(r) for r in d["rows"]])


def _anova_to_dict(table: AnovaTable) -> dict:
    return {
        "rows": [
            {
                "label": r.label,
                "name": r.name,
                "df": r.df,
                "seq_ss": r.seq_ss,
                "adj_ms": r.adj_ms,
                "f": r.f,
                "p": r.p,
                "contribution_pct": r.contribution_pct,
            }
            for r in table.rows
        ],
        "error_df": table.error_df,
        "error_ss": table.error_ss,
        "error_ms": table.error_ms,
        "total_df": table.total_df,
        "total_ss": table.total_ss,
        "zero_variance": table.zero_variance,
    }


def _anova_from_dict(d: dict) -> AnovaTable:
    return AnovaTable(
        rows=tuple(AnovaRow(**row) for row in d["rows"]),
        error_df=d["error_df"],
        error_ss=d["error_ss"],
        error_ms=d["error_ms"],
        total_df=d["total_df"],
        total_ss=d["total_ss"],
        zero_variance=d["zero_variance"],
    )


def _rtable_to_dict(table: ResponseTable) -> dict:
    return {
        "metric": table.metric,
        "factors": [
            {
                "label": f.label,
                "name": f.name,
                "level_values": list(f.level_values),
                "level_means": list(f.level_means),
                "delta": f.delta,
                "rank": f.rank,
                "tied": f.tied,
            }
            for f in table.factors
        ],
    }


def _rtable_from_dict(d: dict) -> ResponseTable:
    return ResponseTable(
        metric=d["metric"],
        factors=tuple(
            FactorResponse(
                label=f["label"],
                name=f["name"],
                level_values=tuple(f["level_values"]),
                level_means=tuple(f["level_means"]),
                delta=f["delta"],
                rank=f["rank"],
                tied=f["tied"],
            )
            for f in d["factors"]
        ),
    )


def _effects_to_dict(data: EffectsData) -> dict:
    return {
        "grand_mean": data.grand_mean,
        "main_effects": [
            {
                "label": m.label,
                "name": m.name,
                "level_values": list(m.level_values),
                "level_counts": list(m.level_counts),
                "level_means": list(m.level_means),
                "level_mean_snr": list(m.level_mean_snr) if m.level_mean_snr else None,
            }
            for m in data.main_effects
        ],
        "interactions": [
            {
                "label_a": it.label_a,
                "label_b": it.label_b,
                "cells": [
                    {
                        "value_a": c.value_a,
                        "value_b": c.value_b,
                        "count": c.count,
                        "mean": c.mean,
                    }
                    for c in it.cells
                ],
            }
            for it in data.interactions
        ],
    }


def _effects_from_dict(d: dict) -> EffectsData:
    return EffectsData(
        grand_mean=d["grand_mean"],
        main_effects=tuple(
            MainEffect(
                label=m["label"],
                name=m["name"],
                level_values=tuple(m["level_values"]),
                level_counts=tuple(m["level_counts"]),
                level_means=tuple(m["level_means"]),
                level_mean_snr=tuple(m["level_mean_snr"]) if m["level_mean_snr"] else None,
            )
            for m in d["main_effects"]
        ),
        interactions=tuple(
            InteractionEffect(
                label_a=it["label_a"],
                label_b=it["label_b"],
                cells=tuple(
                    InteractionCell(
                        value_a=c["value_a"],
                        value_b=c["value_b"],
                        count=c["count"],
                        mean=c["mean"],
                    )
                    for c in it["cells"]
                ),
            )
            for it in d["interactions"]
        ),
    )


def report_from_dict(d: dict) -> Report:
    return Report(
        anova_space=d["anova_space"],
        snr_metric=d["snr_metric"],
        alpha=d["alpha"],
        design=_design_from_dict(d["design"]),
        responses=tuple(tuple(row) for row in d["responses"]),
        mean_responses=tuple(d["mean_responses"]),
        snr=SnrVector(metric=d["snr"]["metric"], values=tuple(d["snr"]["values"])),
        anova=_anova_from_dict(d["anova"]),
        response_table=_rtable_from_dict(d["response_table"]),
        effects=_effects_from_dict(d["effects"]),
        verdicts=tuple(Verdict(**v) for v in d["verdicts"]),
        gaps=tuple(d["gaps"]),
        provenance=dict(d["provenance"]),
    )


def load_report(path: str) -> Report:
    with open(path) as fp:
        return report_from_dict(json.load(fp))


def _make_verdicts(table: AnovaTable, alpha: float) -> tuple:
    out = []
    for row in table.rows:
        target = f"factor {row.label} ({row.name})"
        if row.p is None:
            significant = None
            reason = (
                "zero-variance responses" if table.zero_variance else "saturated design"
            )
            statement = f"{target}: not testable ({reason})"
        elif row.p <= alpha:
            significant = True
            statement = (
                f"{target}: significant effect (P={row.p:.3f} <= alpha={alpha:g})"
            )
        else:
            significant = False
            statement = (
                f"{target}: no significant effect at alpha={alpha:g} (P={row.p:.3f})"
            )
        out.append(
            Verdict(
                label=row.label,
                name=row.name,
                p=row.p,
                significant=significant,
                statement=statement,
            )
        )
    return tuple(out)


def analyze(records, spec: ExperimentSpec) -> Report:
    """Turn RunRecords into a full report using the spec's analysis knobs.

    Failed records are excluded from the numbers and listed in
    ``report.gaps`` so the hole is visible rather than silently averaged
    over.
    """
    records = list(records)
    complete = [r for r in records if r.ok]
    gaps = tuple(r.index for r in records if not r.ok)
    if not complete:
        raise InvalidInputError("no complete run records to analyze")
    widths = {len(r.responses) for r in complete}
    if len(widths) != 1:
        raise InvalidInputError(f"records carry mixed repetition counts {sorted(widths)}")

    design = DesignMatrix.from_values(spec.factors, [r.values for r in complete])
    responses = tuple(tuple(float(v) for v in r.responses) for r in complete)
    y = np.asarray(responses, dtype=float)
    mean_responses = tuple(float(v) for v in y.mean(axis=1))
    snr = snr_vector(y, spec.snr_metric)

    anova_input = mean_responses if spec.anova_space == "raw" else snr.as_array()
    table = anova(design, anova_input)
    rtable = response_table(design, snr)
    eff = effects(design, np.asarray(mean_responses), snr)

    provenance = {
        "package_version": __version__,
        "sim_hash": spec.sim_hash(),
        "seeds": ",".join(str(s) for s in spec.rep_seeds),
        "repetitions": spec.repetitions,
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    return Report(
        anova_space=spec.anova_space,
        snr_metric=spec.snr_metric,
        alpha=spec.alpha,
        design=design,
        responses=responses,
        mean_responses=mean_responses,
        snr=snr,
        anova=table,
        response_table=rtable,
        effects=eff,
        verdicts=_make_verdicts(table, spec.alpha),
        gaps=gaps,
        provenance=provenance,
    )


def _write_csv(path: str, rows) -> None:
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])


def export(report: Report, out_dir: str) -> dict:
    """Write every report artifact into ``out_dir``; returns name -> path."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    def path_of(name):
        paths[name] = os.path.join(out_dir, name)
        return paths[name]

    with open(path_of("report.txt"), "w") as fp:
        fp.write(report.to_text())
    with open(path_of("report.json"), "w") as fp:
        fp.write(report.to_json())
    _write_csv(path_of("anova.csv"), report.anova.to_csv_rows())
    _write_csv(path_of("response_table.csv"), report.response_table.to_csv_rows())
    _write_csv(path_of("main_effects.csv"), report.effects.main_effect_csv_rows())
    _write_csv(path_of("interactions.csv"), report.effects.interaction_csv_rows())
    with open(path_of("design.csv"), "w", newline="") as fp:
        write_design_csv(report.design, fp)
    with open(path_of("records.csv"), "w", newline="") as fp:
        write_response_csv(report.design, np.asarray(report.responses, dtype=float), fp)
    return paths


@dataclass(frozen=True)
class Check:
    name: str
    expected: object
    actual: object
    tol: float | None
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    checks: tuple

    @property
    def failures(self) -> tuple:
        return tuple(c for c in self.checks if not c.passed)

    def to_text(self) -> str:
        lines = [
            f"reference verification: {'PASS' if self.passed else 'FAIL'} "
            f"({len(self.checks) - len(self.failures)}/{len(self.checks)} checks)"
        ]
        for c in self.failures:
            tol = f" (tol {c.tol})" if c.tol is not None else ""
            lines.append(f"  FAIL {c.name}: expected {c.expected}, got {c.actual}{tol}")
        return "\n".join(lines)


def verify_paper(responses=None) -> VerificationReport:
    """Re-derive the reference tables and diff them against the targets.

    ``responses`` substitutes the frozen response column (the self-test
    uses that to prove the gate actually bites).
    """
    design = DesignMatrix.from_values(REFERENCE_FACTORS, REFERENCE_DESIGN_ROWS)
    y = tuple(REFERENCE_POWER_MW if responses is None else responses)
    table = anova(design, y)
    snr = snr_vector([[v] for v in y], "smaller")
    rtable = response_table(design, snr)

    checks = []

    def check(name, expected, actual, tol):
        if tol is None:
            passed = expected == actual
        else:
            passed = actual is not None and abs(actual - expected) <= tol
        checks.append(Check(name=name, expected=expected, actual=actual, tol=tol, passed=passed))

    for label, target in REFERENCE_ANOVA.items():
        row = table.row(label)
        check(f"anova.{label}.df", target["df"], row.df, None)
        check(f"anova.{label}.seq_ss", target["seq_ss"], row.seq_ss, TOL_SS)
        check(f"anova.{label}.adj_ms", target["adj_ms"], row.adj_ms, TOL_MS)
        f_tol = TOL_F_SMALL if target["f"] < 10 else TOL_F
        check(f"anova.{label}.f", target["f"], row.f, f_tol)
        if target["p"] == 0.0:
            checks.append(
                Check(
                    name=f"anova.{label}.p",
                    expected="0.000 at 3 decimals",
                    actual=row.p,
                    tol=None,
                    passed=row.p is not None and row.p < P_ZERO_AT_3DP,
                )
            )
        else:
            check(f"anova.{label}.p", target["p"], row.p, TOL_P)
    check("anova.error.df", REFERENCE_ANOVA_ERROR["df"], table.error_df, None)
    check("anova.error.seq_ss", REFERENCE_ANOVA_ERROR["seq_ss"], table.error_ss, TOL_SS)
    check("anova.error.adj_ms", REFERENCE_ANOVA_ERROR["adj_ms"], table.error_ms, TOL_MS)
    check("anova.total.df", REFERENCE_ANOVA_TOTAL["df"], table.total_df, None)
    check("anova.total.seq_ss", REFERENCE_ANOVA_TOTAL["seq_ss"], table.total_ss, TOL_SS)

    for label, target in REFERENCE_RESPONSE_TABLE.items():
        fr = rtable.factor(label)
        for i, mean in enumerate(target["means"], start=1):
            check(f"snr.{label}.level{i}", mean, fr.level_means[i - 1], TOL_SNR_MEAN)
        check(f"snr.{label}.delta", target["delta"], fr.delta, TOL_SNR_DELTA)
        check(f"snr.{label}.rank", target["rank"], fr.rank, None)

    return VerificationReport(passed=all(c.passed for c in checks), checks=tuple(checks))
