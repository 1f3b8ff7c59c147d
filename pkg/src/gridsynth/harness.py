"""ARC JSON ingestion, guidance construction, and the benchmark harness."""

from __future__ import annotations

import hashlib
import json
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import dsl
from .errors import ConfigError, FormatError, MalformedGrid
from .grid import Grid, grid_from_rows, grid_to_rows
from .guidance import OracleGuidance, TableGuidance, UniformGuidance
from .program import Task, TokenSequence, evaluate, parse
from .search import SearchConfig, SearchResult, solve_task
from .taskgen import GeneratedSample


@dataclass
class RunConfig:
    """Everything one engine invocation needs, CLI-facing defaults included."""

    engine: str = "gridcoder"
    dsl_version: int = 1
    tau: float = 0.02
    timeout: float = 300.0
    bootstrap_k: int = 6
    max_len: int = 40
    max_programs: int = 100_000
    max_nodes: int = 10_000
    seed: int = 0
    guidance: str = "uniform"  # uniform | oracle | file
    oracle_epsilon: float = 0.0
    oracle_distractors: int = 5
    guidance_path: Optional[str] = None
    stages: int = 2
    fan_out: int = 8

    def search_config(self) -> SearchConfig:
        return SearchConfig(
            tau=self.tau,
            timeout=self.timeout,
            bootstrap_k=self.bootstrap_k,
            max_len=self.max_len,
            max_programs=self.max_programs,
            max_nodes=self.max_nodes,
            seed=self.seed,
            dsl_version=self.dsl_version,
            stages=self.stages,
            fan_out=self.fan_out,
        )


def load_task(path) -> Task:
    """Read one task in ARC JSON form: {"train": [...], "test": [...]}."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise FormatError(f"$: not valid JSON ({err})") from err
    if not isinstance(payload, dict):
        raise FormatError("$: task file must hold a JSON object")
    for key in ("train", "test"):
        if key not in payload or not isinstance(payload[key], list):
            raise FormatError(f"$.{key}: missing or not a list")

    def read_pairs(key):
        pairs = []
        for i, item in enumerate(payload[key]):
            for side in ("input", "output"):
                if not isinstance(item, dict) or side not in item:
                    raise FormatError(f"$.{key}[{i}].{side}: missing")
            try:
                pairs.append((grid_from_rows(item["input"]), grid_from_rows(item["output"])))
            except MalformedGrid as err:
                raise MalformedGrid(f"$.{key}[{i}]: {err}") from err
        return tuple(pairs)

    support = read_pairs("train")
    query = read_pairs("test")
    if not support:
        raise FormatError("$.train: needs at least one pair")
    return Task(support=support, query=query, task_id=Path(path).stem)


def save_task(path, task: Task) -> None:
    payload = {
        "train": [
            {"input": grid_to_rows(a), "output": grid_to_rows(b)} for a, b in task.support
        ],
        "test": [
            {"input": grid_to_rows(a), "output": grid_to_rows(b)} for a, b in task.query
        ],
    }
    Path(path).write_text(json.dumps(payload))


def build_source(config: RunConfig, truth: Optional[TokenSequence] = None):
    if config.guidance == "uniform":
        return UniformGuidance(config.dsl_version)
    if config.guidance == "oracle":
        if truth is None:
            raise ConfigError("oracle guidance needs the ground-truth token sequence")
        return OracleGuidance(
            truth,
            version=config.dsl_version,
            epsilon=config.oracle_epsilon,
            n_distractors=config.oracle_distractors,
            seed=config.seed,
        )
    if config.guidance == "file":
        if config.guidance_path is None:
            raise ConfigError("file guidance needs a probability-table path")
        return TableGuidance.from_file(config.guidance_path, config.dsl_version)
    raise ConfigError(f"unknown guidance kind {config.guidance!r}")


def query_correct(result: SearchResult, task: Task, version: int) -> bool:
    """Held-out check: the found program must also map every query input to
    its query output."""
    if not result.found or not task.query:
        return bool(result.found) and not task.query
    tree = parse(result.program, version)
    for grid_in, grid_out in task.query:
        try:
            if evaluate(tree, grid_in, result.color_binding) != grid_out:
                return False
        except Exception:
            return False
    return True


def solve_report(task: Task, config: RunConfig, truth: Optional[TokenSequence] = None) -> dict:
    source = None if config.engine == "lgs_greedy" else build_source(config, truth)
    result = solve_task(task, config.engine, source, config.search_config())
    report = {
        "task_id": task.task_id,
        "engine": config.engine,
        "outcome": result.outcome,
        "program": list(result.program) if result.program else None,
        "joint_prob": result.joint_prob,
        "rank": result.rank,
        "color_binding": list(result.color_binding) if result.color_binding else None,
        "query_correct": query_correct(result, task, config.dsl_version),
        "stats": asdict(result.stats),
    }
    return report


# ------------------------------------------------------------------ benchmark

CSV_HEADER = "task_id,engine,outcome,rank,programs_evaluated,wall_time_s,tau_used"


@dataclass
class BenchRow:
    task_id: str
    engine: str
    outcome: str
    rank: Optional[int]
    programs_evaluated: int
    wall_time_s: float
    tau_used: float
    query_correct: bool = False

    def csv(self) -> str:
        rank = "" if self.rank is None else str(self.rank)
        return (
            f"{self.task_id},{self.engine},{self.outcome},{rank},"
            f"{self.programs_evaluated},{self.wall_time_s:.4f},{self.tau_used:.6g}"
        )


@dataclass
class BenchmarkReport:
    rows: list[BenchRow] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    determinism_hash: str = ""

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER] + [row.csv() for row in self.rows]) + "\n"

    def to_json(self) -> dict:
        return {
            "rows": [asdict(row) for row in self.rows],
            "aggregates": self.aggregates,
            "determinism_hash": self.determinism_hash,
        }


def _aggregate(rows: list[BenchRow], version: int) -> dict:
    n_primitives = len(dsl.registry(version))
    out = {}
    for engine in sorted({r.engine for r in rows}):
        sub = [r for r in rows if r.engine == engine]
        times = [r.wall_time_s for r in sub]
        solved = [r for r in sub if r.query_correct]
        mean_time = statistics.mean(times) if times else 0.0
        out[engine] = {
            "tasks": len(sub),
            "solve_rate": len(solved) / len(sub) if sub else 0.0,
            "mean_time": mean_time,
            "stddev_time": statistics.pstdev(times) if len(times) > 1 else 0.0,
            "mean_time_per_primitive": mean_time / n_primitives,
        }
    return out


def _hash_rows(rows: list[BenchRow]) -> str:
    # Wall time is excluded so re-runs with identical seeds hash identically.
    stable = [
        [r.task_id, r.engine, r.outcome, r.rank, r.programs_evaluated, r.query_correct]
        for r in rows
    ]
    return hashlib.sha256(json.dumps(stable, sort_keys=True).encode()).hexdigest()


def run_benchmark(
    entries: Sequence[tuple[str, Task, Optional[TokenSequence]]],
    engines: Sequence[str],
    config: RunConfig,
) -> BenchmarkReport:
    """Run every engine on every task under identical seeds.  Per-task
    failures are recorded in their row and never abort the suite."""
    if not engines:
        raise ConfigError("at least one engine is required")
    if not entries:
        raise ConfigError("benchmark suite is empty")
    rows = []
    for engine in engines:
        for task_id, task, truth in entries:
            run = RunConfig(**{**asdict(config), "engine": engine})
            try:
                report = solve_report(task, run, truth)
                rows.append(
                    BenchRow(
                        task_id=task_id,
                        engine=engine,
                        outcome=report["outcome"],
                        rank=report["rank"],
                        programs_evaluated=report["stats"]["programs_evaluated"],
                        wall_time_s=report["stats"]["wall_time"],
                        tau_used=report["stats"]["tau_used"],
                        query_correct=report["query_correct"],
                    )
                )
            except Exception as err:  # noqa: BLE001 - row-level isolation
                rows.append(
                    BenchRow(
                        task_id=task_id,
                        engine=engine,
                        outcome=f"error:{type(err).__name__}",
                        rank=None,
                        programs_evaluated=0,
                        wall_time_s=0.0,
                        tau_used=config.tau,
                    )
                )
    report = BenchmarkReport(rows=rows)
    report.aggregates = _aggregate(rows, config.dsl_version)
    report.determinism_hash = _hash_rows(rows)
    return report


def suite_entries(samples: Sequence[GeneratedSample]) -> list[tuple[str, Task, TokenSequence]]:
    return [
        (f"{s.generator_id}-{s.seed}", s.task, s.truth)
        for s in samples
    ]
