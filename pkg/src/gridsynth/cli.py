"""Command-line interface: solve, benchmark, generate, enumerate, dsl dump."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import dsl
from .errors import GridSynthError
from .guidance import load_prob_table
from .harness import RunConfig, load_task, run_benchmark, solve_report, suite_entries
from .program import tokens_from_json, vocabulary
from .search import ENGINES, enumerate_candidates
from .taskgen import GENERATORS, GeneratorConfig, generate as generate_sample, read_dataset
from .program import check_program


def _run_options(fn):
    options = [
        click.option("--engine", default="gridcoder", type=click.Choice(sorted(ENGINES)), show_default=True),
        click.option("--dsl-version", default=1, type=click.IntRange(1, 3), show_default=True),
        click.option("--tau", default=0.02, type=float, show_default=True),
        click.option("--timeout", default=300.0, type=float, show_default=True, help="per-task budget in seconds"),
        click.option("--bootstrap-k", default=6, type=int, show_default=True),
        click.option("--max-len", default=40, type=int, show_default=True),
        click.option("--max-programs", default=100_000, type=int, show_default=True),
        click.option("--guidance", default="uniform", type=click.Choice(["uniform", "oracle", "file"]), show_default=True),
        click.option("--oracle-epsilon", default=0.0, type=float, show_default=True),
        click.option("--guidance-path", default=None, type=click.Path(), help="probability-table JSON for --guidance file"),
        click.option("--seed", default=0, type=int, show_default=True),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _config(**kw) -> RunConfig:
    return RunConfig(
        engine=kw["engine"],
        dsl_version=kw["dsl_version"],
        tau=kw["tau"],
        timeout=kw["timeout"],
        bootstrap_k=kw["bootstrap_k"],
        max_len=kw["max_len"],
        max_programs=kw["max_programs"],
        seed=kw["seed"],
        guidance=kw["guidance"],
        oracle_epsilon=kw["oracle_epsilon"],
        guidance_path=kw["guidance_path"],
    )


@click.group()
def main():
    """Program induction for ARC-style grid puzzles."""


@main.command()
@click.argument("task_path", type=click.Path(exists=True))
@_run_options
@click.option("--truth", default=None, help="ground-truth tokens (JSON array or path), for oracle guidance")
@click.option("--out", default=None, type=click.Path(), help="also write the JSON result here")
def solve(task_path, truth, out, **kw):
    """Search for a program solving one ARC task; exit 0 iff the found
    program is also correct on the held-out query pairs."""
    config = _config(**kw)
    truth_tokens = None
    if truth is not None:
        raw = truth if truth.lstrip().startswith("[") else Path(truth).read_text()
        truth_tokens = tokens_from_json(json.loads(raw))
    try:
        task = load_task(task_path)
        report = solve_report(task, config, truth_tokens)
    except GridSynthError as err:
        raise click.ClickException(str(err)) from err
    text = json.dumps(report, indent=2)
    click.echo(text)
    if out:
        Path(out).write_text(text)
    sys.exit(0 if report["query_correct"] else 1)


@main.command()
@click.argument("suite", type=click.Path(exists=True))
@_run_options
@click.option("--engines", "-e", "engine_list", multiple=True, help="engines to compare (repeatable)")
@click.option("--out", default=None, type=click.Path(), help="output prefix; writes <out>.csv and <out>.json")
def benchmark(suite, engine_list, out, **kw):
    """Run engines over a suite: a JSON-lines dataset (with ground truth) or
    a directory of ARC task files."""
    if not engine_list:
        raise click.UsageError("pass at least one --engines")
    config = _config(**kw)
    path = Path(suite)
    try:
        if path.is_dir():
            entries = [(p.stem, load_task(p), None) for p in sorted(path.glob("*.json"))]
        else:
            entries = suite_entries(read_dataset(path))
        report = run_benchmark(entries, list(engine_list), config)
    except GridSynthError as err:
        raise click.ClickException(str(err)) from err
    click.echo(report.to_csv(), nl=False)
    click.echo(json.dumps(report.aggregates, indent=2))
    click.echo(f"determinism_hash: {report.determinism_hash}")
    if out:
        Path(f"{out}.csv").write_text(report.to_csv())
        Path(f"{out}.json").write_text(json.dumps(report.to_json(), indent=2))


@main.command()
@click.argument("generator_id", type=click.Choice(sorted(GENERATORS)))
@click.argument("count", type=click.IntRange(min=1))
@click.option("--dsl-version", default=1, type=click.IntRange(1, 3), show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--n-support", default=3, type=click.IntRange(min=2), show_default=True)
@click.option("--tiling-transforms", default=None, help="comma-separated transform subset for the tiling generator")
@click.option("--out", required=True, type=click.Path())
def generate(generator_id, count, dsl_version, seed, n_support, tiling_transforms, out):
    """Emit COUNT generated samples as a JSON-lines dataset, validating the
    truth-reproduces-outputs contract on every line."""
    transforms = tuple(tiling_transforms.split(",")) if tiling_transforms else None
    lines = []
    for i in range(count):
        config = GeneratorConfig(
            seed=seed + i,
            dsl_version=dsl_version,
            n_support=n_support,
            tiling_transforms=transforms,
        )
        try:
            sample = generate_sample(generator_id, config)
        except GridSynthError as err:
            raise click.ClickException(f"generation failed at seed {seed + i}: {err}") from err
        if check_program(sample.truth, sample.task, dsl_version).status != "solved":
            raise click.ClickException(
                f"generator contract violated at seed {seed + i}: truth does not reproduce outputs"
            )
        lines.append(json.dumps(sample.to_json()))
    Path(out).write_text("\n".join(lines) + "\n")
    click.echo(f"wrote {count} samples to {out}")


@main.command("enumerate")
@click.argument("table_path", type=click.Path(exists=True))
@click.option("--tau", default=0.02, type=float, show_default=True)
@click.option("--cap", default=100_000, type=int, show_default=True)
@click.option("--dsl-version", default=1, type=click.IntRange(1, 3), show_default=True)
@click.option("--limit", default=50, type=int, show_default=True, help="print at most this many candidates")
@click.option("--out", default=None, type=click.Path(), help="write the full ranking as JSON")
def enumerate_cmd(table_path, tau, cap, dsl_version, limit, out):
    """Rank all candidate programs of a probability table by joint probability."""
    try:
        _, space = load_prob_table(table_path, expected_vocab=vocabulary(dsl_version))
        candidates, tau_used = enumerate_candidates(space, tau, cap, dsl_version)
    except GridSynthError as err:
        raise click.ClickException(str(err)) from err
    click.echo(f"candidates: {len(candidates)} (tau_used={tau_used:.6g})")
    for rank, cand in enumerate(candidates[:limit], start=1):
        flag = "valid  " if cand.valid else "invalid"
        click.echo(f"{rank:6d} {cand.joint_prob:.9f} {flag} {' '.join(cand.tokens)}")
    if out:
        payload = [
            {"rank": i + 1, "joint_prob": c.joint_prob, "valid": c.valid, "tokens": list(c.tokens)}
            for i, c in enumerate(candidates)
        ]
        Path(out).write_text(json.dumps(payload))


@main.group("dsl")
def dsl_group():
    """DSL registry utilities."""


@dsl_group.command("dump")
@click.option("--version", default=1, type=click.IntRange(1, 3), show_default=True)
@click.option("--out", default=None, type=click.Path())
def dsl_dump(version, out):
    """Emit the primitive catalog as JSON (names, signatures, versions)."""
    payload = [
        {
            "name": spec.name,
            "params": [k.value for k in spec.param_kinds],
            "returns": spec.return_kind.value,
            "version": spec.dsl_version,
        }
        for spec in dsl.registry(version)
    ]
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {len(payload)} primitives to {out}")
    else:
        click.echo(text)


if __name__ == "__main__":
    main()
