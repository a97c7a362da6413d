"""Command-line entry points.

Exit codes: 0 on success, 1 when a verification or analysis gate fails,
2 on usage or input errors.  The simulator is imported only by the ``run``
path, so every verification and analysis command works without it.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from importlib import resources

from ._version import __version__
from .arrays import STANDARD_CATALOG, get_array, verify_orthogonality
from .design import design_to_csv_text, read_response_csv
from .exceptions import RplTaguchiError
from .experiment import (
    ExperimentSpec,
    expand_design,
    parse_spec,
    records_from_design,
    run_experiment,
)
from .report import analyze, export, load_report, verify_paper

PAPER_SCALE_DURATION_MS = 600_000


def bundled_spec_path():
    """Path to the packaged reference experiment spec."""
    return resources.files("rpltaguchi.data") / "paper.spec"


def _load_spec(args) -> ExperimentSpec:
    if args.spec is None:
        with bundled_spec_path().open() as fp:
            spec = parse_spec(fp)
    else:
        spec = parse_spec(args.spec)
    overrides = {}
    if getattr(args, "seed", None):
        overrides["seeds"] = tuple(int(p) for p in args.seed.split(",") if p.strip())
    if getattr(args, "repetitions", None):
        overrides["repetitions"] = args.repetitions
    if getattr(args, "paper_scale", False):
        overrides["duration_ms"] = PAPER_SCALE_DURATION_MS
    if getattr(args, "anova_space", None):
        overrides["anova_space"] = args.anova_space
    return replace(spec, **overrides) if overrides else spec


def _cmd_design(args) -> int:
    spec = _load_spec(args)
    design = expand_design(spec)
    text = design_to_csv_text(design)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "design.csv")
        with open(path, "w", newline="") as fp:
            fp.write(text)
        print(f"{design.n_runs} runs on {design.array.name} -> {path}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_run(args) -> int:
    spec = _load_spec(args)

    def progress(record):
        if record.error:
            print(f"point {record.index}: FAILED ({record.error})", file=sys.stderr)
        else:
            print(
                f"point {record.index}: mean {record.mean_response:.4f} mW "
                f"(snr {record.snr:.3f} dB)"
            )

    records = run_experiment(spec, out_dir=args.out, jobs=args.jobs, progress=progress)
    report = analyze(records, spec)
    paths = export(report, args.out)
    print(report.to_text())
    print("wrote: " + ", ".join(sorted(paths)))
    return 1 if report.gaps else 0


def _cmd_analyze(args) -> int:
    factors = None
    spec_kwargs = {}
    if args.spec is not None:
        base = parse_spec(args.spec)
        factors = base.factors
        spec_kwargs = {
            "snr_metric": base.snr_metric,
            "anova_space": base.anova_space,
            "alpha": base.alpha,
        }
    with open(args.responses, newline="") as fp:
        design, y = read_response_csv(fp, factors=factors)
    if args.anova_space:
        spec_kwargs["anova_space"] = args.anova_space
    reps = y.shape[1]
    spec = ExperimentSpec(
        factors=design.factors,
        repetitions=reps,
        seeds=tuple(range(1, reps + 1)),
        **spec_kwargs,
    )
    records = records_from_design(design, y, spec.snr_metric)
    report = analyze(records, spec)
    if args.out:
        paths = export(report, args.out)
        print(report.to_text())
        print("wrote: " + ", ".join(sorted(paths)))
    else:
        print(report.to_text())
    return 0


def _cmd_report(args) -> int:
    report = load_report(args.report)
    paths = export(report, args.out)
    print("wrote: " + ", ".join(sorted(paths)))
    return 0


def _cmd_verify_paper(args) -> int:
    result = verify_paper()
    if result.passed:
        print(result.to_text())
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            with open(os.path.join(args.out, "verify-paper.txt"), "w") as fp:
                fp.write(result.to_text() + "\n")
        return 0
    print(result.to_text(), file=sys.stderr)
    return 1


def _cmd_verify_oa(args) -> int:
    if args.spec is not None:
        spec = parse_spec(args.spec)
        design = expand_design(spec)
        array = design.array
        columns = [design.assignment[f.label] for f in design.factors]
    else:
        array = get_array(args.array)
        columns = None
    result = verify_orthogonality(array, columns)
    if result.passed:
        print(result.to_text())
        return 0
    print(result.to_text(), file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rpltaguchi",
        description="Orthogonal-array experiments over a trickle-paced network simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_spec(p):
        p.add_argument(
            "--spec",
            metavar="PATH",
            default=None,
            help="experiment spec file (default: the bundled reference spec)",
        )

    p = sub.add_parser("design", help="print or save the expanded design matrix")
    add_spec(p)
    p.add_argument("--out", metavar="DIR", default=None)
    p.set_defaults(fn=_cmd_design)

    p = sub.add_parser("run", help="simulate the design and analyze the results")
    add_spec(p)
    p.add_argument("--out", metavar="DIR", required=True, help="output directory (resumable)")
    p.add_argument("--seed", metavar="LIST", default=None, help="comma list, one per repetition")
    p.add_argument("--repetitions", type=int, default=None, metavar="N")
    p.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel worker processes")
    p.add_argument(
        "--paper-scale",
        action="store_true",
        help=f"run the full {PAPER_SCALE_DURATION_MS} ms duration instead of the desk scale",
    )
    p.add_argument("--anova-space", choices=("raw", "snr"), default=None)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("analyze", help="analyze an existing response CSV")
    p.add_argument("--responses", metavar="CSV", required=True)
    p.add_argument("--spec", metavar="PATH", default=None, help="optional factor definitions")
    p.add_argument("--anova-space", choices=("raw", "snr"), default=None)
    p.add_argument("--out", metavar="DIR", default=None)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("report", help="re-export a saved report.json")
    p.add_argument("--report", metavar="JSON", required=True)
    p.add_argument("--out", metavar="DIR", required=True)
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("verify-paper", help="check the analysis against the reference dataset")
    p.add_argument("--out", metavar="DIR", default=None)
    p.set_defaults(fn=_cmd_verify_paper)

    p = sub.add_parser("verify-oa", help="audit an orthogonal array's pairwise balance")
    p.add_argument("--array", default="L27", choices=[a.name for a in STANDARD_CATALOG])
    p.add_argument(
        "--spec",
        metavar="PATH",
        default=None,
        help="audit the array and columns a spec would use instead",
    )
    p.set_defaults(fn=_cmd_verify_oa)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except RplTaguchiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
