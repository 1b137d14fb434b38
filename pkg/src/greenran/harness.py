"""Monte-Carlo experiments: config ingestion, algorithm sweeps, CSV output."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .conic import SolverError
from .gsbf import run_gsbf
from .l2box import L2BoxSettings, run_l2box
from .mip import branch_and_bound, enumerate_optimal, run_rmip
from .model import Channel, SystemConfig, check_feasibility, make_instance
from .result import AlgoResult, AlgoStatus

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ALGORITHMS = ("l2box", "gsbf", "rmip", "mip_enum", "mip_bnb")
MAX_ENUM_L = 12
FEASIBILITY_TOL = 1e-6
FEASIBLE_STATUSES = {AlgoStatus.CONVERGED.value, AlgoStatus.OUTER_LIMIT.value, AlgoStatus.NODE_LIMIT.value}
DETAIL_HEADER = [
    "trial", "seed", "algo", "sinr_db", "status", "power_w", "active_count",
    "active_set", "outer_iterations", "solver_calls", "wall_ms",
]
SUMMARY_HEADER = ["sinr_db", "algo", "n_feasible", "mean_power_w", "std_power_w", "mean_active"]
TRACE_HEADER = ["t", "lambda", "residual", "tol1", "tol2", "lagrangian"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    base_config: SystemConfig = field(default_factory=SystemConfig)
    sinr_targets_db: list[float] = field(default_factory=lambda: [0.0, 2.0, 4.0, 6.0, 8.0])
    trials: int = 25
    algorithms: list[str] = field(default_factory=lambda: ["l2box", "gsbf", "rmip"])
    base_seed: int = 0
    output_dir: str = "results"
    parallelism: int = 1
    l2box: L2BoxSettings = field(default_factory=L2BoxSettings)
    record_timing: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")
        if not self.sinr_targets_db:
            raise ConfigError("sinr_targets_db must be nonempty")
        self.sinr_targets_db = [float(x) for x in self.sinr_targets_db]
        self.algorithms = list(self.algorithms)
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")


@dataclass
class ResultRecord:
    trial: int
    seed: int
    algo: str
    sinr_db: float
    status: str
    power_w: float
    active_count: int
    active_set: str
    outer_iterations: int
    solver_calls: int
    wall_ms: float
    channel_hash: str = ""
    verified: bool | None = None  # in-memory only: feasible solution passed check_feasibility

    @property
    def feasible(self) -> bool:
        return self.status in FEASIBLE_STATUSES


# ---------------------------------------------------------------- config


def _build(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def spec_from_dict(doc: dict) -> ExperimentSpec:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {doc.get('schema_version')!r}")
    extra = set(doc) - {"schema_version", "system", "experiment", "l2box"}
    if extra:
        raise ConfigError(f"unknown top-level keys {sorted(extra)}")
    system = dict(doc.get("system", {}))
    if "gamma_db" in system:
        raise ConfigError("system.gamma_db is not a field; give SINR targets via experiment.sinr_targets_db")
    cfg = _build(SystemConfig, system, "system")
    l2 = _build(L2BoxSettings, dict(doc.get("l2box", {})), "l2box")
    exp = dict(doc.get("experiment", {}))
    exp.setdefault("base_seed", cfg.seed)
    for forbidden in ("base_config", "l2box"):
        if forbidden in exp:
            raise ConfigError(f"experiment.{forbidden} is set at the top level")
    return _build(ExperimentSpec, {**exp, "base_config": cfg, "l2box": l2}, "experiment")


def load_spec(path) -> ExperimentSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return spec_from_dict(doc)


def spec_to_dict(spec: ExperimentSpec) -> dict:
    exp = {k: v for k, v in asdict(spec).items() if k not in ("base_config", "l2box")}
    return {
        "schema_version": SCHEMA_VERSION,
        "system": spec.base_config.to_dict(),
        "experiment": exp,
        "l2box": asdict(spec.l2box),
    }


# ---------------------------------------------------------------- running


def _runners(spec: ExperimentSpec) -> dict[str, Callable[[SystemConfig, Channel], AlgoResult]]:
    return {
        "l2box": lambda cfg, ch: run_l2box(cfg, ch, spec.l2box),
        "gsbf": run_gsbf,
        "rmip": run_rmip,
        "mip_enum": enumerate_optimal,
        "mip_bnb": branch_and_bound,
    }


def _record(trial, seed, algo, db, res: AlgoResult | None, status: str, wall_ms: float, L: int, digest: str,
            verified: bool | None = None):
    if res is not None and res.feasible:
        bits = "".join("1" if l in res.active_set else "0" for l in range(L))
        return ResultRecord(trial, seed, algo, db, status, res.power_w, len(res.active_set), bits,
                            res.outer_iterations, res.solver_calls, wall_ms, digest, verified)
    calls = res.solver_calls if res is not None else 0
    outer = res.outer_iterations if res is not None else 0
    return ResultRecord(trial, seed, algo, db, status, math.nan, 0, "", outer, calls, wall_ms, digest)


def run_trial(spec: ExperimentSpec, trial: int) -> list[ResultRecord]:
    seed = spec.base_seed + trial
    base = spec.base_config
    ch = make_instance(base, seed)
    digest = ch.digest()
    runners = _runners(spec)
    out = []
    for db in spec.sinr_targets_db:
        cfg = base.with_sinr_db(db)
        for algo in spec.algorithms:
            if algo == "mip_enum" and cfg.L > MAX_ENUM_L:
                out.append(_record(trial, seed, algo, db, None, "Skipped", 0.0, cfg.L, digest))
                continue
            t0 = time.perf_counter()
            try:
                res = runners[algo](cfg, ch)
                status = res.status.value
            except SolverError as exc:
                log.warning("trial %d %s @ %s dB: %s", trial, algo, db, exc)
                res, status = None, "Error"
            wall = (time.perf_counter() - t0) * 1e3
            if ch.digest() != digest:
                raise RuntimeError(f"channel of trial {trial} was modified by {algo}")
            verified = None
            if res is not None and res.feasible:
                verified = check_feasibility(cfg, ch, res.v_final, res.z_final, FEASIBILITY_TOL).feasible
                if not verified:
                    log.warning("trial %d %s @ %s dB: solution fails the feasibility check", trial, algo, db)
            out.append(_record(trial, seed, algo, db, res, status, wall, cfg.L, digest, verified))
            log.debug("trial %d %s @ %s dB -> %s %.4f W", trial, algo, db, status, out[-1].power_w)
    return out


def _sort_key(r: ResultRecord):
    return (r.sinr_db, r.algo, r.trial)


def run_experiment(spec: ExperimentSpec) -> list[ResultRecord]:
    trials = range(spec.trials)
    if spec.parallelism == 1:
        chunks = [run_trial(spec, i) for i in trials]
    else:
        with ProcessPoolExecutor(max_workers=spec.parallelism) as pool:
            chunks = list(pool.map(run_trial, [spec] * spec.trials, trials))
    records = [r for chunk in chunks for r in chunk]
    for chunk in chunks:
        if len({r.channel_hash for r in chunk}) > 1:
            raise RuntimeError("algorithms within a trial saw different channels")
    return sorted(records, key=_sort_key)


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def summarize(records: Sequence[ResultRecord]) -> list[dict]:
    groups: dict[tuple, list[ResultRecord]] = {}
    for r in records:
        groups.setdefault((r.sinr_db, r.algo), []).append(r)
    rows = []
    for (db, algo) in sorted(groups):
        ok = [r for r in groups[(db, algo)] if r.feasible]
        p = np.array([r.power_w for r in ok], dtype=float)
        a = np.array([r.active_count for r in ok], dtype=float)
        rows.append({
            "sinr_db": db,
            "algo": algo,
            "n_feasible": len(ok),
            "mean_power_w": float(p.mean()) if len(ok) else math.nan,
            "std_power_w": float(p.std()) if len(ok) else math.nan,
            "mean_active": float(a.mean()) if len(ok) else math.nan,
        })
    return rows


def summary_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_summary" + path.suffix)


def emit_results(records: Sequence[ResultRecord], path, timing: bool = False) -> tuple[Path, Path]:
    """Write the detail CSV at ``path`` and the per-(target, algorithm) summary beside it.

    ``wall_ms`` is left blank unless ``timing`` is set so that identical runs
    produce identical bytes.
    """
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    rows = sorted(records, key=_sort_key)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(DETAIL_HEADER)
            for r in rows:
                vals = [getattr(r, k) for k in DETAIL_HEADER]
                if not timing:
                    vals[-1] = ""
                w.writerow([_fmt(v) for v in vals])
        spath = summary_path(path)
        with open(spath, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            for row in summarize(rows):
                w.writerow([_fmt(row[k]) for k in SUMMARY_HEADER])
    except OSError as exc:
        raise OSError(f"writing results to {path}: {exc}") from exc
    return path, spath


def read_results(path) -> list[ResultRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(ResultRecord(
                trial=int(row["trial"]), seed=int(row["seed"]), algo=row["algo"],
                sinr_db=float(row["sinr_db"]), status=row["status"], power_w=float(row["power_w"]),
                active_count=int(row["active_count"]), active_set=row["active_set"],
                outer_iterations=int(row["outer_iterations"]), solver_calls=int(row["solver_calls"]),
                wall_ms=float(row["wall_ms"]) if row["wall_ms"] else math.nan,
            ))
    return out


def emit_trace(result: AlgoResult, path) -> Path:
    if not result.trace:
        raise ValueError("result carries no trace")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for row in result.trace:
                w.writerow([row.t, _fmt(float(row.lam)), _fmt(float(row.residual)), _fmt(float(row.tol1)),
                            _fmt(float(row.tol2)), _fmt(float(row.lagrangian))])
    except OSError as exc:
        raise OSError(f"writing trace to {path}: {exc}") from exc
    return path


def trace_instance(spec: ExperimentSpec, trial: int, sinr_db: float | None = None) -> AlgoResult:
    db = spec.sinr_targets_db[0] if sinr_db is None else sinr_db
    cfg = spec.base_config.with_sinr_db(db)
    return run_l2box(cfg, make_instance(spec.base_config, spec.base_seed + trial), spec.l2box)


def with_overrides(spec: ExperimentSpec, **kw) -> ExperimentSpec:
    kw = {k: v for k, v in kw.items() if v is not None}
    try:
        return replace(spec, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
