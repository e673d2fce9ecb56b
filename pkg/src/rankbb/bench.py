"""Experiment runner: many seeded trials, aggregated against the reference bounds."""
from __future__ import annotations

import csv
import io
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from .algorithms import ALGORITHMS, ConfigError, DEFAULT_RESTART_CAP, run_algorithm, theoretical_bound
from .bitstring import InstanceKind, ProblemInstance
from .oracle import DEFAULT_BUDGET, Oracle

CSV_HEADER = ("trial", "seed", "algorithm", "n", "k", "queries", "success", "restarts")

DEFAULT_INSTANCE = {
    "rls": "onemax",
    "monotone_linear": "onemax",
    "onemax_nary": "onemax",
    "onemax_blockwise": "onemax",
    "onemax_smallk": "onemax",
    "bv_logn": "binaryvalue_star",
}


def trial_seed(base_seed: int, trial: int) -> int:
    """64-bit seed for one trial, a pure function of ``(base_seed, trial)``."""
    ss = np.random.SeedSequence([base_seed & (2**64 - 1), trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _as_list(v) -> list:
    if v is None:
        return [None]
    if isinstance(v, (list, tuple)):
        return list(v)
    return [v]


@dataclass
class ExperimentConfig:
    algorithm: str
    n: int | list[int]
    instance_kind: str | None = None
    k: int | list[int] | None = None
    trials: int = 10
    base_seed: int = 0
    budget: int = DEFAULT_BUDGET
    restart_cap: int = DEFAULT_RESTART_CAP
    workers: int = 1
    output_path: str | None = None

    def __post_init__(self) -> None:
        if self.instance_kind is None:
            self.instance_kind = DEFAULT_INSTANCE.get(self.algorithm, "onemax")
        self.validate()

    @property
    def kind(self) -> InstanceKind:
        return InstanceKind(self.instance_kind)

    def grid(self) -> list[tuple[int, int | None]]:
        return list(product(_as_list(self.n), _as_list(self.k)))

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        try:
            kind = self.kind
        except ValueError:
            raise ConfigError(f"unknown instance kind {self.instance_kind!r}") from None
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.budget < 1:
            raise ConfigError("budget must be at least 1")
        if self.restart_cap < 0:
            raise ConfigError("restart cap must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        spec = ALGORITHMS[self.algorithm]
        for n, k in self.grid():
            if n is None:
                raise ConfigError("n is required")
            spec.check(kind, n, k)


@dataclass
class TrialRow:
    trial: int
    seed: int
    algorithm: str
    n: int
    k: int | None
    queries: int
    success: bool
    restarts: int
    error: str | None = None

    def csv_fields(self) -> list[str]:
        return [str(self.trial), str(self.seed), self.algorithm, str(self.n),
                "" if self.k is None else str(self.k), str(self.queries),
                "true" if self.success else "false", str(self.restarts)]


def aggregate(queries: Sequence[int], successes: Sequence[bool]) -> dict:
    qs = list(queries)
    return {
        "trials": len(qs),
        "mean": statistics.fmean(qs),
        "std": statistics.stdev(qs) if len(qs) > 1 else 0.0,
        "min": min(qs),
        "max": max(qs),
        "median": statistics.median(qs),
        "success_rate": sum(map(bool, successes)) / len(qs),
    }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[TrialRow] = field(default_factory=list)

    def groups(self) -> list[tuple[tuple[int, int | None], list[TrialRow]]]:
        out = []
        for n, k in self.config.grid():
            out.append(((n, k), [r for r in self.rows if r.n == n and r.k == k]))
        return out

    def group_summaries(self) -> list[dict]:
        out = []
        for (n, k), rows in self.groups():
            agg = aggregate([r.queries for r in rows], [r.success for r in rows])
            bound = theoretical_bound(self.config.algorithm, n, k)
            out.append({"n": n, "k": k, **agg, "bound": bound, "bound_ratio": agg["mean"] / bound})
        return out

    @property
    def aggregates(self) -> dict:
        return aggregate([r.queries for r in self.rows], [r.success for r in self.rows])

    @property
    def bound_ratio(self) -> float:
        groups = self.group_summaries()
        if len(groups) == 1:
            return groups[0]["bound_ratio"]
        return statistics.fmean(g["bound_ratio"] for g in groups)

    def plot_data(self) -> list[tuple[int, float, float]]:
        return [(g["n"], g["mean"], g["bound"]) for g in self.group_summaries()]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def to_json(self) -> str:
        cfg = asdict(self.config)
        cfg.pop("output_path", None)
        cfg.pop("workers", None)
        doc = {
            "config": cfg,
            "aggregates": self.aggregates,
            "bound_ratio": self.bound_ratio,
            "groups": self.group_summaries(),
            "errors": [{"trial": r.trial, "n": r.n, "k": r.k, "error": r.error} for r in self.rows if r.error],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def run_trial(algorithm: str, kind: InstanceKind, n: int, k: int | None, trial: int, seed: int,
              budget: int, restart_cap: int) -> TrialRow:
    """One run on a fresh uniform instance; errors end up in the row, not as exceptions."""
    rng = np.random.default_rng(seed)
    instance = ProblemInstance.random(kind, n, rng)
    oracle = Oracle(instance, ALGORITHMS[algorithm].required_mode, budget)
    try:
        t = run_algorithm(algorithm, oracle, rng, k=k, restart_cap=restart_cap)
        return TrialRow(trial, seed, algorithm, n, k, t.total_queries, t.success, t.restarts)
    except Exception as exc:  # recorded per row
        return TrialRow(trial, seed, algorithm, n, k, oracle.query_count, oracle.optimum_hit, 0,
                        f"{type(exc).__name__}: {exc}")


def _run_packed(args) -> TrialRow:
    return run_trial(*args)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every trial of every ``(n, k)`` in the grid; rows come back in trial order."""
    config.validate()
    jobs = []
    trial = 0
    for n, k in config.grid():
        for _ in range(config.trials):
            jobs.append((config.algorithm, config.kind, n, k, trial, trial_seed(config.base_seed, trial),
                         config.budget, config.restart_cap))
            trial += 1
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_run_packed, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    else:
        rows = [_run_packed(j) for j in jobs]
    return ExperimentReport(config, rows)


def emit_report(report: ExperimentReport, out: str | Path, fmt: str = "both", figure: bool = True) -> list[Path]:
    """Write ``<out>.csv`` and/or ``<out>.json``, the plot data and a figure.

    ``out`` is a path stem; an existing directory gets ``report.*`` inside it.
    """
    if fmt not in ("csv", "json", "both"):
        raise ConfigError(f"unknown format {fmt!r}")
    out = Path(out)
    if out.is_dir():
        out = out / "report"
    out.parent.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("csv", "both"):
        p = out.with_suffix(".csv")
        p.write_text(report.to_csv())
        written.append(p)
    if fmt in ("json", "both"):
        p = out.with_suffix(".json")
        p.write_text(report.to_json())
        written.append(p)
    p = out.with_name(out.name + "_plot.csv")
    lines = ["n,mean_queries,bound"] + [f"{n},{m!r},{b!r}" for n, m, b in report.plot_data()]
    p.write_text("\n".join(lines) + "\n")
    written.append(p)
    if figure:
        from .plotting import plot_report
        written.append(plot_report(report, out.with_suffix(".png")))
    return written


def load_rows(csv_path: str | Path) -> list[dict]:
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        rows = []
        for r in reader:
            rows.append({
                "trial": int(r["trial"]), "seed": int(r["seed"]), "algorithm": r["algorithm"],
                "n": int(r["n"]), "k": int(r["k"]) if r["k"] else None, "queries": int(r["queries"]),
                "success": r["success"] == "true", "restarts": int(r["restarts"]),
            })
        return rows


def check_report_files(csv_path: str | Path, json_path: str | Path) -> bool:
    """True when the JSON aggregates equal those recomputed from the CSV rows."""
    rows = load_rows(csv_path)
    doc = json.loads(Path(json_path).read_text())
    agg = aggregate([r["queries"] for r in rows], [r["success"] for r in rows])
    if agg != doc["aggregates"]:
        return False
    for g in doc["groups"]:
        sub = [r for r in rows if r["n"] == g["n"] and r["k"] == g["k"]]
        again = aggregate([r["queries"] for r in sub], [r["success"] for r in sub])
        if any(again[key] != g[key] for key in again):
            return False
    return True

