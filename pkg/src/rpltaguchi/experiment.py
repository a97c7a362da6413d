"""Experiment specs, design expansion, and batch execution with resume.

Spec files are INI format with three sections::

    [experiment]          # all keys optional
    array = L27           # or "auto" to pick from the catalog
    repetitions = 3
    seeds = 1, 2, 3, 4, 5
    snr_metric = smaller  # smaller | larger | nominal
    anova_space = raw     # raw | snr
    alpha = 0.05
    budget = 600          # max design points x repetitions

    [factors]             # label = name: level, level, ...
    A = network_size: 20, 30, 40

    [simulation]          # fixed simulator knobs, all optional
    duration_ms = 120000
    area = 100 x 100
    radio_range = 50

Factor names bind to simulator knobs (``network_size``, ``mobility_speed``,
``dio_interval_min``, ``dio_interval_doublings``, ``redundancy_constant``);
a factor whose name has no binding can still be designed and analyzed but
not simulated.  Repetition ``j`` of every design point runs with
``seeds[j]``, so the seed list must be at least ``repetitions`` long.

The simulator itself is imported only inside :func:`run_experiment`, so
every other entry point works in a build without the simulator module.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import dataclass

from .arrays import get_array, min_runs, select_array
from .design import DesignMatrix, Factor
from .exceptions import ExperimentSpecError, InvalidDesignError
from .snr import SNR_METRICS, snr_vector
from .trickle import TrickleParams

_EXPERIMENT_KEYS = {
    "array",
    "repetitions",
    "seeds",
    "snr_metric",
    "anova_space",
    "alpha",
    "budget",
}
_SIMULATION_KEYS = {
    "duration_ms",
    "area",
    "radio_range",
    "mobility_step_ms",
    "node_count",
    "mobility_speed",
    "dio_interval_min",
    "dio_interval_doublings",
    "redundancy_constant",
    "parent_timeout_intervals",
    "cpu_active_mw",
    "lpm_mw",
    "listen_mw",
    "tx_mw",
    "dio_airtime_ms",
    "dio_cpu_cost_ms",
    "idle_listen_fraction",
}
_POWER_KEYS = {
    "cpu_active_mw",
    "lpm_mw",
    "listen_mw",
    "tx_mw",
    "dio_airtime_ms",
    "dio_cpu_cost_ms",
    "idle_listen_fraction",
}

#: Factor names that bind to simulator configuration.
SIM_FACTOR_NAMES = (
    "network_size",
    "mobility_speed",
    "dio_interval_min",
    "dio_interval_doublings",
    "redundancy_constant",
)


@dataclass(frozen=True)
class ExperimentSpec:
    factors: tuple
    array_name: str = "auto"
    repetitions: int = 3
    seeds: tuple = (1, 2, 3, 4, 5)
    snr_metric: str = "smaller"
    anova_space: str = "raw"
    alpha: float = 0.05
    budget: int = 600
    duration_ms: int = 120_000
    area: tuple = (100.0, 100.0)
    radio_range: float = 50.0
    mobility_step_ms: int = 100
    node_count: int = 20
    mobility_speed: float = 5.0
    dio_interval_min: int = 12
    dio_interval_doublings: int = 8
    redundancy_constant: int = 10
    parent_timeout_intervals: int = 3
    power_overrides: tuple = ()

    def __post_init__(self):
        factors = tuple(self.factors)
        object.__setattr__(self, "factors", factors)
        if not factors:
            raise ExperimentSpecError("spec declares no factors")
        labels = [f.label for f in factors]
        if len(set(labels)) != len(labels):
            raise ExperimentSpecError(f"duplicate factor labels {labels}")
        names = [f.name for f in factors]
        if len(set(names)) != len(names):
            raise ExperimentSpecError(f"duplicate factor names {names}")
        if self.repetitions < 1:
            raise ExperimentSpecError(f"repetitions must be >= 1, got {self.repetitions}")
        seeds = tuple(int(s) for s in self.seeds)
        object.__setattr__(self, "seeds", seeds)
        if len(seeds) < self.repetitions:
            raise ExperimentSpecError(
                f"{len(seeds)} seeds for {self.repetitions} repetitions; "
                "each repetition consumes one seed"
            )
        if self.snr_metric not in SNR_METRICS:
            raise ExperimentSpecError(f"unknown snr_metric {self.snr_metric!r}")
        if self.anova_space not in ("raw", "snr"):
            raise ExperimentSpecError(f"anova_space must be raw or snr, got {self.anova_space!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ExperimentSpecError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.budget < 1:
            raise ExperimentSpecError(f"budget must be >= 1, got {self.budget}")
        area = tuple(float(v) for v in self.area)
        if len(area) != 2 or any(v <= 0 for v in area):
            raise ExperimentSpecError(f"area must be two positive lengths, got {self.area!r}")
        object.__setattr__(self, "area", area)
        for key, _ in self.power_overrides:
            if key not in _POWER_KEYS:
                raise ExperimentSpecError(f"unknown power key {key!r}")

    @property
    def rep_seeds(self) -> tuple:
        """The seeds actually consumed: one per repetition, in list order."""
        return self.seeds[: self.repetitions]

    def sim_hash(self) -> str:
        """Digest of everything that influences simulated responses."""
        payload = {
            "factors": [[f.label, f.name, list(f.levels)] for f in self.factors],
            "array": self.array_name,
            "repetitions": self.repetitions,
            "seeds": list(self.rep_seeds),
            "duration_ms": self.duration_ms,
            "area": list(self.area),
            "radio_range": self.radio_range,
            "mobility_step_ms": self.mobility_step_ms,
            "node_count": self.node_count,
            "mobility_speed": self.mobility_speed,
            "dio_interval_min": self.dio_interval_min,
            "dio_interval_doublings": self.dio_interval_doublings,
            "redundancy_constant": self.redundancy_constant,
            "parent_timeout_intervals": self.parent_timeout_intervals,
            "power_overrides": sorted(self.power_overrides),
        }
        blob = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


def _parse_number(text: str, key: str):
    try:
        as_float = float(text)
    except ValueError:
        raise ExperimentSpecError(f"{key}: {text!r} is not a number") from None
    return int(as_float) if as_float.is_integer() else as_float


def _parse_factor_line(label: str, text: str) -> Factor:
    if ":" not in text:
        raise ExperimentSpecError(
            f"factor {label}: expected 'name: level, level, ...', got {text!r}"
        )
    name, _, levels_text = text.partition(":")
    name = name.strip()
    if not name:
        raise ExperimentSpecError(f"factor {label}: empty name")
    levels = tuple(
        _parse_number(part.strip(), f"factor {label}")
        for part in levels_text.split(",")
        if part.strip()
    )
    if len(levels) < 2:
        raise ExperimentSpecError(f"factor {label}: needs at least 2 levels")
    try:
        return Factor(label=label, name=name, levels=levels)
    except InvalidDesignError as exc:
        raise ExperimentSpecError(str(exc)) from None


def _parse_area(text: str) -> tuple:
    parts = [p for p in text.replace("x", " ").replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ExperimentSpecError(f"area: expected 'W x H', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def parse_spec(path_or_fp) -> ExperimentSpec:
    """Read and validate an experiment spec file.

    Unknown sections or keys are rejected outright so a typo cannot
    silently fall back to a default.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str.lower
    try:
        if hasattr(path_or_fp, "read"):
            parser.read_file(path_or_fp)
        else:
            with open(path_or_fp) as fp:
                parser.read_file(fp)
    except OSError as exc:
        raise ExperimentSpecError(f"cannot read spec: {exc}") from None
    except configparser.Error as exc:
        raise ExperimentSpecError(f"malformed spec: {exc}") from None

    known_sections = {"experiment", "factors", "simulation"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ExperimentSpecError(f"unknown sections {sorted(unknown)}")
    if "factors" not in parser or not parser["factors"]:
        raise ExperimentSpecError("spec needs a [factors] section with at least one factor")

    factors = tuple(
        _parse_factor_line(label.upper(), text) for label, text in parser["factors"].items()
    )

    kwargs: dict = {"factors": factors}
    if "experiment" in parser:
        section = parser["experiment"]
        unknown = set(section) - _EXPERIMENT_KEYS
        if unknown:
            raise ExperimentSpecError(f"unknown [experiment] keys {sorted(unknown)}")
        if "array" in section:
            kwargs["array_name"] = section["array"].strip()
        if "repetitions" in section:
            kwargs["repetitions"] = int(section["repetitions"])
        if "seeds" in section:
            kwargs["seeds"] = tuple(
                int(p.strip()) for p in section["seeds"].split(",") if p.strip()
            )
        if "snr_metric" in section:
            kwargs["snr_metric"] = section["snr_metric"].strip()
        if "anova_space" in section:
            kwargs["anova_space"] = section["anova_space"].strip()
        if "alpha" in section:
            kwargs["alpha"] = float(section["alpha"])
        if "budget" in section:
            kwargs["budget"] = int(section["budget"])

    if "simulation" in parser:
        section = parser["simulation"]
        unknown = set(section) - _SIMULATION_KEYS
        if unknown:
            raise ExperimentSpecError(f"unknown [simulation] keys {sorted(unknown)}")
        overrides = []
        for key, text in section.items():
            if key == "area":
                kwargs["area"] = _parse_area(text)
            elif key in _POWER_KEYS:
                overrides.append((key, float(text)))
            elif key in (
                "duration_ms",
                "mobility_step_ms",
                "node_count",
                "dio_interval_min",
                "dio_interval_doublings",
                "redundancy_constant",
                "parent_timeout_intervals",
            ):
                kwargs[key] = int(text)
            else:
                kwargs[key] = float(text)
        if overrides:
            kwargs["power_overrides"] = tuple(overrides)

    return ExperimentSpec(**kwargs)


def expand_design(spec: ExperimentSpec) -> DesignMatrix:
    """Materialize the spec's design points on its orthogonal array."""
    if spec.array_name.lower() == "auto":
        array = select_array(spec.factors)
    else:
        array = get_array(spec.array_name)
        for f in spec.factors:
            if f.n_levels != array.levels:
                raise InvalidDesignError(
                    f"factor {f.label} has {f.n_levels} levels but {array.name} "
                    f"columns carry {array.levels}"
                )
        if array.columns < len(spec.factors):
            raise InvalidDesignError(
                f"{array.name} has {array.columns} columns for {len(spec.factors)} factors"
            )
        if array.runs < min_runs(spec.factors):
            raise InvalidDesignError(
                f"{array.name} has {array.runs} runs but the factors need "
                f"{min_runs(spec.factors)}"
            )
    return DesignMatrix.from_array(spec.factors, array)


@dataclass(frozen=True)
class RunRecord:
    """Responses of one design point: ``responses[j]`` ran with ``seeds[j]``."""

    index: int
    values: tuple
    seeds: tuple
    responses: tuple
    snr: float | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def mean_response(self) -> float | None:
        if not self.responses:
            return None
        return sum(self.responses) / len(self.responses)


def _point_hash(sim_hash: str, index: int, values: tuple) -> str:
    blob = f"{sim_hash}|{index}|{json.dumps(list(values))}"
    return hashlib.sha256(blob.encode()).hexdigest()


def _record_snr(spec: ExperimentSpec, responses) -> float:
    return snr_vector([list(responses)], spec.snr_metric).values[0]


def build_sim_config(spec: ExperimentSpec, values: tuple, seed: int):
    """SimConfig for one design point; factor values override spec knobs."""
    from .sim import PowerModel, SimConfig  # deferred: see module docstring

    knobs = {
        "node_count": spec.node_count,
        "mobility_speed": spec.mobility_speed,
        "dio_interval_min": spec.dio_interval_min,
        "dio_interval_doublings": spec.dio_interval_doublings,
        "redundancy_constant": spec.redundancy_constant,
    }
    for f, v in zip(spec.factors, values):
        if f.name == "network_size":
            knobs["node_count"] = int(v)
        elif f.name in knobs:
            knobs[f.name] = v
        else:
            raise ExperimentSpecError(
                f"factor {f.label} ({f.name}) has no simulator binding; "
                f"known names: {', '.join(SIM_FACTOR_NAMES)}"
            )
    power = PowerModel(**dict(spec.power_overrides))
    return SimConfig(
        node_count=int(knobs["node_count"]),
        area=spec.area,
        duration_ms=spec.duration_ms,
        mobility_speed=float(knobs["mobility_speed"]),
        trickle=TrickleParams(
            int(knobs["dio_interval_min"]),
            int(knobs["dio_interval_doublings"]),
            int(knobs["redundancy_constant"]),
        ),
        radio_range=spec.radio_range,
        seed=seed,
        power=power,
        mobility_step_ms=spec.mobility_step_ms,
        parent_timeout_intervals=spec.parent_timeout_intervals,
    )


def _simulate_point(args) -> tuple:
    """Worker: run one design point's repetitions; never raises."""
    spec, index, values = args
    from .sim import run as sim_run

    responses = []
    try:
        for seed in spec.rep_seeds:
            responses.append(sim_run(build_sim_config(spec, values, seed)).mean_power_mw)
    except Exception as exc:  # a failed point is recorded, not fatal
        return index, tuple(responses), f"{type(exc).__name__}: {exc}"
    return index, tuple(responses), None


class _RunLog:
    """Append-only JSONL of completed points, keyed by point hash."""

    def __init__(self, path: str, sim_hash: str):
        self.path = path
        self.sim_hash = sim_hash
        self.done: dict = {}
        if os.path.exists(path):
            with open(path) as fp:
                lines = [json.loads(line) for line in fp if line.strip()]
            if not lines or lines[0].get("sim_hash") != sim_hash:
                raise ExperimentSpecError(
                    f"run log {path} belongs to a different spec; "
                    "use a fresh --out directory"
                )
            for entry in lines[1:]:
                self.done[entry["hash"]] = entry
            self._fp = open(path, "a")
        else:
            self._fp = open(path, "w")
            self._write({"sim_hash": sim_hash})

    def _write(self, obj) -> None:
        self._fp.write(json.dumps(obj, sort_keys=True) + "\n")
        self._fp.flush()

    def record(self, point_hash: str, record: RunRecord) -> None:
        self._write(
            {
                "hash": point_hash,
                "index": record.index,
                "values": list(record.values),
                "seeds": list(record.seeds),
                "responses": list(record.responses),
                "snr": record.snr,
                "error": record.error,
            }
        )

    def close(self) -> None:
        self._fp.close()


def run_experiment(spec: ExperimentSpec, out_dir=None, jobs: int = 1, progress=None) -> list:
    """Simulate every design point ``repetitions`` times.

    With ``out_dir`` set, completed points land in ``runlog.jsonl`` as they
    finish and a rerun over the same directory skips them (resume).  With
    ``jobs > 1`` points run in a process pool; results are identical to a
    serial run.  Returns RunRecords sorted by design point index.
    """
    design = expand_design(spec)
    total = design.n_runs * spec.repetitions
    if total > spec.budget:
        raise ExperimentSpecError(
            f"{design.n_runs} points x {spec.repetitions} repetitions = {total} "
            f"simulations exceed the budget of {spec.budget}"
        )

    sim_hash = spec.sim_hash()
    log = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        log = _RunLog(os.path.join(out_dir, "runlog.jsonl"), sim_hash)

    points = design.points
    records: dict = {}
    pending = []
    for point in points:
        h = _point_hash(sim_hash, point.index, point.values)
        if log is not None and h in log.done:
            entry = log.done[h]
            records[point.index] = RunRecord(
                index=point.index,
                values=point.values,
                seeds=tuple(entry["seeds"]),
                responses=tuple(entry["responses"]),
                snr=entry["snr"],
                error=entry["error"],
            )
        else:
            pending.append((point, h))

    def finish(point, h, responses, error):
        snr = _record_snr(spec, responses) if error is None else None
        record = RunRecord(
            index=point.index,
            values=point.values,
            seeds=spec.rep_seeds,
            responses=responses,
            snr=snr,
            error=error,
        )
        records[point.index] = record
        if log is not None:
            log.record(h, record)
        if progress is not None:
            progress(record)

    try:
        if jobs > 1 and len(pending) > 1:
            from concurrent.futures import ProcessPoolExecutor

            by_index = {point.index: (point, h) for point, h in pending}
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                args = [(spec, point.index, point.values) for point, _ in pending]
                for index, responses, error in pool.map(_simulate_point, args):
                    point, h = by_index[index]
                    finish(point, h, responses, error)
        else:
            for point, h in pending:
                index, responses, error = _simulate_point((spec, point.index, point.values))
                finish(point, h, responses, error)
    finally:
        if log is not None:
            log.close()

    return [records[i] for i in sorted(records)]


def records_from_design(design: DesignMatrix, response_rows, snr_metric: str) -> list:
    """Wrap externally obtained responses (one row per run) as RunRecords."""
    rows = [tuple(float(v) for v in row) for row in response_rows]
    if len(rows) != design.n_runs:
        raise ExperimentSpecError(f"{len(rows)} response rows for {design.n_runs} runs")
    out = []
    for point, row in zip(design.points, rows):
        out.append(
            RunRecord(
                index=point.index,
                values=point.values,
                seeds=(),
                responses=row,
                snr=snr_vector([list(row)], snr_metric).values[0],
                error=None,
            )
        )
    return out


def records_with_responses(spec: ExperimentSpec, response_rows) -> list:
    """Like :func:`records_from_design`, over the spec's expanded design."""
    return records_from_design(expand_design(spec), response_rows, spec.snr_metric)
