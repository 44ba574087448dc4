"""Experiment configuration, per-trial scheme runs and CSV sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import baselines
from .channel import CellConfig, ConfigError, generate_scenario
from .dual_opt import DualOptions, solve_joint
from .mapping3d import count_complete_assignments, exhaustive_assignment
from .model import AllocationResult, Scenario, build_result

SCHEMES = (
    "proposed_joint",
    "proposed_mapping_equal_power",
    "exhaustive",
    "random",
    "greedy",
)
SCHEME_ALIASES = {"proposed": "proposed_mapping_equal_power"}

CSV_COLUMNS = (
    "scheme",
    "pb_dbm",
    "trial",
    "seed",
    "sum_rate_bits_per_s_per_hz",
    "assigned_pairs",
    "dual_iterations",
    "dual_gap",
    "runtime_ms",
)

U64 = 2**64
RANDOM_STREAM = 1


def canonical_scheme(name: str) -> str:
    name = SCHEME_ALIASES.get(name, name)
    if name not in SCHEMES:
        raise ConfigError(f"schemes: unknown scheme {name!r}; expected one of {', '.join(SCHEMES)}")
    return name


@dataclass(frozen=True)
class SweepConfig:
    pb_dbm: tuple[float, ...] = (10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 100
    base_seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.pb_dbm, (list, tuple)) or not self.pb_dbm:
            raise ConfigError("sweep.pb_dbm: must be a non-empty list of numbers")
        for value in self.pb_dbm:
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"sweep.pb_dbm: entries must be finite numbers, got {value!r}")
        object.__setattr__(self, "pb_dbm", tuple(self.pb_dbm))
        if isinstance(self.trials, bool) or not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"sweep.trials: must be an integer >= 1, got {self.trials!r}")
        seed = self.base_seed
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < U64:
            raise ConfigError(f"sweep.base_seed: must be an unsigned 64-bit integer, got {seed!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    cell: CellConfig = field(default_factory=CellConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    schemes: tuple[str, ...] = ("proposed_joint",)
    dual: DualOptions = field(default_factory=DualOptions)

    def trial_seed(self, trial: int) -> int:
        return (self.sweep.base_seed + trial) % U64

    def with_overrides(self, scheme: str | None = None, seed: int | None = None) -> "ExperimentConfig":
        schemes = (canonical_scheme(scheme),) if scheme else self.schemes
        sweep = self.sweep
        if seed is not None:
            sweep = SweepConfig(sweep.pb_dbm, sweep.trials, seed)
        return ExperimentConfig(self.cell, sweep, schemes, self.dual)


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: must be a JSON object")
    return value


def _dual_from_dict(data: dict) -> DualOptions:
    known = {f.name for f in fields(DualOptions)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"dual: unknown field(s) {sorted(unknown)}")
    data = dict(data)
    if isinstance(data.get("lambda_uue0"), list):
        data["lambda_uue0"] = tuple(data["lambda_uue0"])
    try:
        return DualOptions(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = set(data) - {"cell", "sweep", "schemes", "dual"}
    if unknown:
        raise ConfigError(f"config: unknown field(s) {sorted(unknown)}")
    try:
        cell = CellConfig.from_dict(_section(data, "cell"))
    except TypeError as exc:
        raise ConfigError(f"cell: {exc}") from None
    sweep_data = _section(data, "sweep")
    unknown = set(sweep_data) - {"pb_dbm", "trials", "base_seed"}
    if unknown:
        raise ConfigError(f"sweep: unknown field(s) {sorted(unknown)}")
    sweep = SweepConfig(**sweep_data)
    schemes = data.get("schemes", ["proposed_joint"])
    if not isinstance(schemes, list) or not schemes:
        raise ConfigError("schemes: must be a non-empty list of scheme names")
    canonical = []
    for name in schemes:
        if not isinstance(name, str):
            raise ConfigError(f"schemes: entries must be strings, got {name!r}")
        if canonical_scheme(name) not in canonical:
            canonical.append(canonical_scheme(name))
    return ExperimentConfig(cell, sweep, tuple(canonical), _dual_from_dict(_section(data, "dual")))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)


# -- running schemes -----------------------------------------------------------

def exhaustive_skip_reason(scenario_shape: tuple[int, int, int]) -> str | None:
    slots = min(scenario_shape)
    if slots > baselines.EXHAUSTIVE_MAX_SLOTS:
        return f"skipped: min(M,N,K)={slots} > {baselines.EXHAUSTIVE_MAX_SLOTS}"
    count = count_complete_assignments(*scenario_shape)
    if count > baselines.EXHAUSTIVE_MAX_COUNT:
        return f"skipped: {count} assignments > {baselines.EXHAUSTIVE_MAX_COUNT}"
    return None


def scenario_for(config: ExperimentConfig, pb_dbm: float, seed: int) -> Scenario:
    scenario, _ = generate_scenario(config.cell.replace(seed=seed, p_bs_dbm=float(pb_dbm)))
    return scenario


def run_scheme(
    scheme: str,
    scenario: Scenario,
    seed: int,
    dual: DualOptions = DualOptions(),
) -> AllocationResult:
    """Run one scheme on one scenario; ``seed`` drives the random scheme only."""
    scheme = canonical_scheme(scheme)
    if scheme == "proposed_joint":
        return solve_joint(scenario, dual)
    if scheme == "proposed_mapping_equal_power":
        if dual.mapping_mode == "exhaustive":
            assignment = exhaustive_assignment(baselines.equal_power_tensor(scenario))
            return build_result(scenario, assignment, baselines.equal_power(scenario, assignment))
        return baselines.proposed_mapping_equal_power(scenario)
    if scheme == "exhaustive":
        return baselines.exhaustive_search(scenario, "equal")
    if scheme == "random":
        rng = np.random.default_rng([seed, RANDOM_STREAM])
        assignment = baselines.random_mapping(scenario, rng)
    else:
        assignment = baselines.greedy_mapping(scenario)
    return build_result(scenario, assignment, baselines.equal_power(scenario, assignment))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _run_trial(args) -> list[dict]:
    config, pb, trial, timing = args
    seed = config.trial_seed(trial)
    scenario = scenario_for(config, pb, seed)
    rows = []
    for scheme in config.schemes:
        if scheme == "exhaustive" and exhaustive_skip_reason(scenario.shape):
            continue
        started = time.perf_counter()
        result = run_scheme(scheme, scenario, seed, config.dual)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        joint = scheme == "proposed_joint"
        rows.append({
            "scheme": scheme,
            "pb_dbm": pb,
            "trial": trial,
            "seed": seed,
            "sum_rate_bits_per_s_per_hz": result.sum_rate,
            "assigned_pairs": len(result.assignment),
            "dual_iterations": result.diagnostics.iterations if joint else None,
            "dual_gap": result.diagnostics.dual_gap if joint else None,
            "runtime_ms": elapsed_ms if timing else None,
        })
    return rows


def worker_count() -> int:
    env = os.environ.get("FDRA_THREADS")
    if env:
        try:
            count = int(env)
        except ValueError:
            raise ConfigError(f"FDRA_THREADS: expected a positive integer, got {env!r}") from None
        if count < 1:
            raise ConfigError(f"FDRA_THREADS: expected a positive integer, got {env!r}")
        return count
    return os.cpu_count() or 1


def sweep_rows(config: ExperimentConfig, timing: bool = False, progress=None) -> list[dict]:
    """All CSV rows of a sweep, sorted by (scheme, pb_dbm, trial).

    Exhaustive search that would be too large is replaced by one note row per
    sweep, placed before the data rows.
    """
    tasks = [(config, pb, t, timing) for pb in config.sweep.pb_dbm for t in range(config.sweep.trials)]
    workers = min(worker_count(), len(tasks))
    rows: list[dict] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, trial_rows in enumerate(pool.map(_run_trial, tasks, chunksize=1)):
                rows.extend(trial_rows)
                if progress:
                    progress(i + 1, len(tasks))
    else:
        for i, task in enumerate(tasks):
            rows.extend(_run_trial(task))
            if progress:
                progress(i + 1, len(tasks))
    rows.sort(key=lambda r: (r["scheme"], float(r["pb_dbm"]), r["trial"]))

    notes = []
    if "exhaustive" in config.schemes:
        c = config.cell
        reason = exhaustive_skip_reason((c.m_count, c.n_count, c.k_count))
        if reason:
            notes.append({"scheme": "exhaustive", "sum_rate_bits_per_s_per_hz": reason})
    return notes + rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            row.get(col, "") if isinstance(row.get(col), str) else _fmt(row.get(col))
            for col in CSV_COLUMNS
        )
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_sweep(config_path, output_path, *, scheme=None, seed=None, timing=False, progress=None) -> list[dict]:
    """Run the configured sweep and write the CSV atomically to ``output_path``."""
    config = load_config(config_path).with_overrides(scheme, seed)
    rows = sweep_rows(config, timing=timing, progress=progress)
    write_atomic(output_path, rows_to_csv(rows))
    return rows
