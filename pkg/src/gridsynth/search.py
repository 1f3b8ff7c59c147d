"""Search strategies over token probability spaces.

All engines share one invocation contract: ``solve_task(task, engine_name,
source, config)`` returns a SearchResult whose outcome is "found", "timeout",
or "exhausted".  A found program always re-verifies against the task's
support pairs.  Engines are deterministic given (task, source, config, seed).
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import dsl
from .errors import ConfigError
from .grid import Grid, pixelwise_similarity
from .guidance import GuidanceSource, ProbSpace, bootstrap_prob_space, get_prob_space
from .program import (
    EOS,
    IDENTITY,
    MAX_SEQUENCE_LENGTH,
    NEW_LEVEL,
    CheckResult,
    ProgramTree,
    Task,
    TokenSequence,
    check_program,
    encode,
    evaluate,
    intermediate_outputs,
    parse,
)

TAU_ESCALATION_FACTOR = 1.5


@dataclass
class SearchConfig:
    tau: float = 0.02
    timeout: float = 300.0
    bootstrap_k: int = 6
    max_len: int = MAX_SEQUENCE_LENGTH
    max_programs: int = 100_000
    max_nodes: int = 10_000
    seed: int = 0
    dsl_version: int = 1
    exploration_c: float = 1.25
    max_depth: int = 6
    beam: Optional[int] = None
    stages: int = 2
    fan_out: int = 8
    collect_trace: bool = False


@dataclass(frozen=True)
class Candidate:
    tokens: TokenSequence
    joint_prob: float
    valid: bool


@dataclass
class TraceEntry:
    """One distinct intermediate value: the per-support grids some evaluated
    program produced at one node, plus the sub-program that produced them."""

    joint_prob: float
    sub_tokens: TokenSequence
    grids: tuple[Grid, ...]
    similarity: float
    color_binding: Optional[tuple[int, int]] = None


@dataclass
class SearchStats:
    programs_evaluated: int = 0
    wall_time: float = 0.0
    tau_used: float = 0.0
    nodes_expanded: int = 0
    model_queries: int = 0


@dataclass
class SearchResult:
    outcome: str  # "found" | "timeout" | "exhausted"
    program: Optional[TokenSequence] = None
    joint_prob: Optional[float] = None
    rank: Optional[int] = None
    color_binding: Optional[tuple[int, int]] = None
    stats: SearchStats = field(default_factory=SearchStats)
    trace: list[TraceEntry] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.outcome == "found"


# ------------------------------------------------------------- enumeration

def _position_choices(space: ProbSpace, tau: float, eos_id: int):
    """Per position: sorted non-EOS token ids above tau and whether EOS is.

    A position where nothing clears tau falls back to its argmax class.
    """
    choices = []
    for position in range(space.positions):
        above = space.classes_above(position, tau)
        if len(above) == 0:
            above = np.array([int(np.argmax(space.rows[position]))])
        eos_allowed = eos_id in above
        non_eos = [int(i) for i in above if i != eos_id]
        choices.append((non_eos, eos_allowed))
    return choices


def _count_candidates(choices) -> int:
    total, through = 0, 1
    for non_eos, eos_allowed in choices:
        if eos_allowed:
            total += through
        through *= len(non_eos)
        if through == 0:
            return total
    return total + through


def _structurally_valid(tokens: TokenSequence, table) -> bool:
    """Cheap arity-conservation check (no tree build, no type checking).

    Candidates passing this can still fail the full parse on type grounds;
    the evaluator maps those to "error" at zero evaluation cost.
    """
    levels: list[list[str]] = [[]]
    for t in tokens:
        if t == EOS:
            break
        if t == NEW_LEVEL:
            levels.append([])
        else:
            levels[-1].append(t)
    if any(not level for level in levels) or len(levels[-1]) != 1:
        return False
    produced = len(levels[0])
    for level in levels[1:]:
        consumed = 0
        for t in level:
            if t == IDENTITY:
                consumed += 1
            else:
                spec = table.get(t)
                if spec is None:
                    return False
                consumed += len(spec.param_kinds)
        if consumed != produced:
            return False
        produced = len(level)
    return True


def enumerate_candidates(
    space: ProbSpace,
    tau: float,
    cap: int = 100_000,
    version: int = 1,
) -> tuple[list[Candidate], float]:
    """All sequences built from above-tau classes, sorted by joint probability.

    A sequence ends at the first position choosing EOS, or by running off the
    last row.  When the candidate count would exceed ``cap``, tau is escalated
    multiplicatively until it fits.  Syntactically invalid sequences stay in
    the ranking but are marked, so the order is purely probabilistic.
    Returns (candidates, tau_used).
    """
    eos_id = space.vocab.index(EOS)
    tau_used = tau
    choices = _position_choices(space, tau_used, eos_id)
    while _count_candidates(choices) > cap and tau_used <= 1.0:
        tau_used *= TAU_ESCALATION_FACTOR
        choices = _position_choices(space, tau_used, eos_id)

    rows = space.rows
    vocab = space.vocab
    out: list[tuple[float, tuple[int, ...]]] = []

    def descend(position: int, ids: tuple[int, ...], prob: float) -> None:
        if position == len(choices):
            out.append((prob, ids))
            return
        non_eos, eos_allowed = choices[position]
        if eos_allowed:
            out.append((prob * rows[position][eos_id], ids + (eos_id,)))
        for tid in non_eos:
            descend(position + 1, ids + (tid,), prob * rows[position][tid])

    descend(0, (), 1.0)
    out.sort(key=lambda item: (-item[0], item[1]))

    table = dsl.by_name(version)
    candidates = []
    for prob, ids in out:
        tokens = tuple(vocab[i] for i in ids)
        candidates.append(Candidate(tokens, float(prob), _structurally_valid(tokens, table)))
    return candidates, tau_used


# ------------------------------------------------------- trace bookkeeping

def _subtree_tokens(tree: ProgramTree, level: int, index: int) -> TokenSequence:
    """Re-encode the subtree rooted at one node as a standalone program."""
    needed = {level: {index}}
    for depth in range(level, 0, -1):
        below = set()
        for i in needed[depth]:
            below.update(tree.levels[depth][i].children)
        needed[depth - 1] = below
    parts: list[str] = []
    for depth in range(level + 1):
        if depth:
            parts.append(NEW_LEVEL)
        parts.extend(tree.levels[depth][i].token for i in sorted(needed[depth]))
    return tuple(parts) + (EOS,)


def _grids_key(grids: Sequence[Grid]) -> bytes:
    return b"".join(g.content_key() for g in grids)


def _collect_trace(
    bucket: dict,
    candidate: Candidate,
    tree: ProgramTree,
    task: Task,
    binding,
) -> None:
    traces = [intermediate_outputs(tree, x, binding) for x, _ in task.support]
    per_position: dict[tuple[int, int], list] = {}
    for trace in traces:
        for position, value in trace:
            per_position.setdefault(position, []).append(value)
    input_key = _grids_key([x for x, _ in task.support])
    targets = [y for _, y in task.support]
    for position, values in per_position.items():
        if len(values) != len(task.support):
            continue
        if not all(isinstance(v, Grid) for v in values):
            continue
        key = _grids_key(values)
        if key == input_key:
            continue
        existing = bucket.get(key)
        if existing is not None and existing.joint_prob >= candidate.joint_prob:
            continue
        sim = float(np.mean([pixelwise_similarity(g, t) for g, t in zip(values, targets)]))
        bucket[key] = TraceEntry(
            joint_prob=candidate.joint_prob,
            sub_tokens=_subtree_tokens(tree, *position),
            grids=tuple(values),
            similarity=sim,
            color_binding=binding,
        )


# ------------------------------------------------------------ core engines

def gridcoder_solve(task: Task, source: GuidanceSource, config: SearchConfig) -> SearchResult:
    """Bootstrap a probability space, enumerate candidates by joint
    probability, and evaluate them in rank order until one solves the task."""
    start = time.perf_counter()
    deadline = start + config.timeout
    stats = SearchStats()
    space = bootstrap_prob_space(
        source, task, config.bootstrap_k, config.tau, config.max_len, config.seed
    )
    candidates, stats.tau_used = enumerate_candidates(
        space, config.tau, config.max_programs, config.dsl_version
    )
    bucket: dict = {}
    result = SearchResult("exhausted", stats=stats)
    for rank, candidate in enumerate(candidates, start=1):
        if time.perf_counter() > deadline:
            result.outcome = "timeout"
            break
        if not candidate.valid:
            continue
        try:
            tree = parse(candidate.tokens, config.dsl_version)
        except Exception:
            # type-invalid: parse cost only, never evaluated
            continue
        check = check_program(candidate.tokens, task, config.dsl_version)
        stats.programs_evaluated += 1
        if config.collect_trace and check.status != "error":
            _collect_trace(bucket, candidate, tree, task, check.color_binding)
        if check.status == "solved":
            result = SearchResult(
                "found",
                program=candidate.tokens,
                joint_prob=candidate.joint_prob,
                rank=rank,
                color_binding=check.color_binding,
                stats=stats,
            )
            break
    result.trace = list(bucket.values())
    stats.wall_time = time.perf_counter() - start
    return result


def greedy_decode_solve(task: Task, source: GuidanceSource, config: SearchConfig) -> SearchResult:
    """Evaluate exactly the argmax decode as a single candidate."""
    start = time.perf_counter()
    stats = SearchStats(tau_used=config.tau)
    vocab = tuple(source.vocab)
    eos_id = vocab.index(EOS)
    decoded: list[str] = []
    joint = 1.0
    while len(decoded) < config.max_len:
        probs = np.asarray(source.next_token_distribution(task, 0, tuple(decoded)))
        stats.model_queries += 1
        best = int(np.argmax(probs))
        joint *= float(probs[best])
        if best == eos_id:
            break
        decoded.append(vocab[best])
    tokens = tuple(decoded) + (EOS,)
    check = check_program(tokens, task, config.dsl_version)
    stats.programs_evaluated = 1
    stats.wall_time = time.perf_counter() - start
    if check.status == "solved":
        return SearchResult(
            "found", program=tokens, joint_prob=joint, rank=1,
            color_binding=check.color_binding, stats=stats,
        )
    return SearchResult("exhausted", stats=stats)


def gridcoder_cond_solve(task: Task, source: GuidanceSource, config: SearchConfig) -> SearchResult:
    """Best-first search over the prefix tree, re-querying the source for a
    fresh next-token distribution at every expanded prefix (no conditional
    independence assumption)."""
    if not getattr(source, "supports_prefix_conditioning", False):
        raise ConfigError("conditional search needs a prefix-conditioned source, not a table")
    start = time.perf_counter()
    deadline = start + config.timeout
    stats = SearchStats(tau_used=config.tau)
    vocab = tuple(source.vocab)
    eos_id = vocab.index(EOS)

    # heap entries: (-joint, token-id path, tokens, complete)
    heap: list[tuple[float, tuple[int, ...], TokenSequence, bool]] = [(-1.0, (), (), False)]
    result = SearchResult("exhausted", stats=stats)
    while heap:
        if time.perf_counter() > deadline:
            result.outcome = "timeout"
            break
        neg_joint, path, tokens, complete = heapq.heappop(heap)
        joint = -neg_joint
        if complete:
            stats.programs_evaluated += 1
            check = check_program(tokens, task, config.dsl_version)
            if check.status == "solved":
                result = SearchResult(
                    "found", program=tokens, joint_prob=joint,
                    rank=stats.programs_evaluated, color_binding=check.color_binding,
                    stats=stats,
                )
                break
            continue
        if stats.nodes_expanded >= config.max_nodes:
            result.outcome = "timeout"
            break
        stats.nodes_expanded += 1
        probs = np.asarray(source.next_token_distribution(task, 0, tokens))
        stats.model_queries += 1
        above = [int(i) for i in np.nonzero(probs > config.tau)[0]]
        if not above:
            above = [int(np.argmax(probs))]
        for tid in above:
            child_tokens = tokens + (vocab[tid],)
            child_joint = joint * float(probs[tid])
            done = tid == eos_id or len(child_tokens) >= config.max_len
            heapq.heappush(heap, (-child_joint, path + (tid,), child_tokens, done))
    stats.wall_time = time.perf_counter() - start
    return result


# -------------------------------------------------------------------- MCTS

class _MctsNode:
    __slots__ = ("visits", "value_sum", "children", "priors", "expanded")

    def __init__(self):
        self.visits = 0
        self.value_sum = 0.0
        self.children: dict[int, _MctsNode] = {}
        self.priors: dict[int, float] = {}
        self.expanded = False

    @property
    def mean_value(self) -> float:
        return self.value_sum / self.visits if self.visits else 0.0


def mcts_solve(
    task: Task,
    source: GuidanceSource,
    config: SearchConfig,
    similarity: Callable[[Grid, Grid], float] = pixelwise_similarity,
) -> SearchResult:
    """PUCT tree search over token prefixes: priors come from the source, the
    value of an evaluable sequence is its mean pixel similarity to the support
    targets (1.0 triggers full confirmation), and each expansion is scored via
    one greedy rollout."""
    start = time.perf_counter()
    deadline = start + config.timeout
    stats = SearchStats(tau_used=config.tau)
    vocab = tuple(source.vocab)
    eos_id = vocab.index(EOS)

    def program_value(tokens: TokenSequence) -> tuple[float, Optional[CheckResult]]:
        if tokens and tokens[-1] != EOS:
            tokens = tokens + (EOS,)
        stats.programs_evaluated += 1
        check = check_program(tokens, task, config.dsl_version)
        if check.status == "solved":
            return 1.0, check
        if check.status == "error":
            return 0.0, None
        tree = parse(tokens, config.dsl_version)
        total = 0.0
        for grid_in, grid_out in task.support:
            try:
                total += similarity(evaluate(tree, grid_in, check.color_binding), grid_out)
            except Exception:
                return 0.0, None
        return total / len(task.support), None

    def rollout(tokens: TokenSequence) -> TokenSequence:
        decoded = list(tokens)
        while len(decoded) < config.max_len:
            probs = np.asarray(source.next_token_distribution(task, 0, tuple(decoded)))
            stats.model_queries += 1
            best = int(np.argmax(probs))
            if best == eos_id:
                break
            decoded.append(vocab[best])
        return tuple(decoded)

    root = _MctsNode()
    result = SearchResult("exhausted", stats=stats)
    for _ in range(config.max_nodes):
        if time.perf_counter() > deadline:
            result.outcome = "timeout"
            break
        node, tokens, visited = root, (), [root]
        while node.expanded and node.children:
            total_visits = max(1, node.visits)
            best_tid, best_score = None, -np.inf
            for tid in sorted(node.children):  # lowest token id wins ties
                child = node.children[tid]
                score = child.mean_value + config.exploration_c * node.priors[tid] * np.sqrt(
                    total_visits
                ) / (1 + child.visits)
                if score > best_score:
                    best_tid, best_score = tid, score
            node = node.children[best_tid]
            tokens = tokens + (vocab[best_tid],)
            visited.append(node)
            if tokens[-1] == EOS or len(tokens) >= config.max_len:
                break

        terminal = bool(tokens) and (tokens[-1] == EOS or len(tokens) >= config.max_len)
        if terminal:
            candidate = tokens
            value, solved = program_value(candidate)
        else:
            probs = np.asarray(source.next_token_distribution(task, 0, tokens))
            stats.model_queries += 1
            above = [int(i) for i in np.nonzero(probs > config.tau)[0]]
            if not above:
                above = [int(np.argmax(probs))]
            mass = sum(float(probs[i]) for i in above)
            for tid in above:
                node.children[tid] = _MctsNode()
                node.priors[tid] = float(probs[tid]) / mass if mass > 0 else 1.0 / len(above)
            node.expanded = True
            stats.nodes_expanded += 1
            candidate = rollout(tokens)
            value, solved = program_value(candidate)
        if solved is not None:
            final = candidate if candidate and candidate[-1] == EOS else candidate + (EOS,)
            result = SearchResult(
                "found", program=final, joint_prob=None,
                rank=stats.programs_evaluated, color_binding=solved.color_binding,
                stats=stats,
            )
            break
        for visited_node in visited:
            visited_node.visits += 1
            visited_node.value_sum += value
    stats.wall_time = time.perf_counter() - start
    return result


# ------------------------------------------------------ similarity greedy

def lgs_greedy_solve(
    task: Task,
    config: SearchConfig,
    similarity: Callable[[Grid, Grid], float] = pixelwise_similarity,
) -> SearchResult:
    """Similarity-guided search over chains of unary grid transforms.

    Layer by layer, every unary move is attempted on each kept state (a state
    holds the per-support intermediate grids); states are ranked by mean
    similarity to the support targets and the best ``beam`` survive to the
    next depth.  ``beam=1`` is the pure greedy climb; ``beam=None`` keeps
    every distinct state, subject to the node budget.  The move set is the
    version-1 grid-to-grid subset (the latent-color primitive is excluded,
    since its binding would multiply the branching factor)."""
    start = time.perf_counter()
    deadline = start + config.timeout
    stats = SearchStats(tau_used=config.tau)
    moves = [s for s in dsl.unary_grid_primitives(1) if not s.needs_latent]
    targets = [y for _, y in task.support]

    def priority(grids: Sequence[Grid]) -> float:
        return float(np.mean([similarity(g, t) for g, t in zip(grids, targets)]))

    def chain_tokens(chain: tuple[str, ...]) -> TokenSequence:
        if not chain:
            return (IDENTITY, EOS)
        parts: list[str] = []
        for i, name in enumerate(chain):
            if i:
                parts.append(NEW_LEVEL)
            parts.append(name)
        return tuple(parts) + (EOS,)

    def finish(chain: tuple[str, ...]) -> Optional[SearchResult]:
        tokens = chain_tokens(chain)
        if check_program(tokens, task, config.dsl_version).status != "solved":
            return None
        return SearchResult(
            "found", program=tokens, joint_prob=None,
            rank=stats.programs_evaluated, stats=stats,
        )

    start_grids = tuple(x for x, _ in task.support)
    stats.programs_evaluated = 1
    if all(g == t for g, t in zip(start_grids, targets)):
        found = finish(())
        if found is not None:
            found.stats.wall_time = time.perf_counter() - start
            return found

    seen = {_grids_key(start_grids)}
    layer = [((), start_grids)]
    result = SearchResult("exhausted", stats=stats)
    for _ in range(config.max_depth):
        children = []
        out_of_budget = False
        for chain, grids in layer:
            if time.perf_counter() > deadline:
                result.outcome = "timeout"
                out_of_budget = True
                break
            if stats.nodes_expanded >= config.max_nodes:
                out_of_budget = True
                break
            stats.nodes_expanded += 1
            for move in moves:
                try:
                    nxt = tuple(dsl.apply_primitive(move, [g]) for g in grids)
                except Exception:
                    continue
                key = _grids_key(nxt)
                if key in seen:
                    continue
                seen.add(key)
                stats.programs_evaluated += 1
                child_chain = chain + (move.name,)
                if all(g == t for g, t in zip(nxt, targets)):
                    found = finish(child_chain)
                    if found is not None:
                        found.stats.wall_time = time.perf_counter() - start
                        return found
                children.append((priority(nxt), child_chain, nxt))
        if out_of_budget or not children:
            break
        children.sort(key=lambda c: (-c[0], c[1]))
        if config.beam is not None:
            children = children[: config.beam]
        layer = [(chain, grids) for _, chain, grids in children]
    stats.wall_time = time.perf_counter() - start
    return result


# -------------------------------------------------- execution-guided search

def compose_programs(
    outer: TokenSequence, inner: TokenSequence, version: int = 1
) -> Optional[TokenSequence]:
    """Graft ``inner`` on top of ``outer``: every input-grid read at inner's
    level 0 is replaced by a full copy of the outer subtree (the syntax has no
    fan-out, so multi-consumer grafts duplicate the producer).  Returns None
    when the graft is impossible, e.g. inner starts with an unapplied lambda.
    """
    outer_tree = parse(outer, version)
    inner_tree = parse(inner, version)
    copies = 0
    for node in inner_tree.levels[0]:
        if node.is_lambda:
            return None
        if node.token == IDENTITY:
            copies += 1
        else:
            copies += len(node.spec.param_kinds)
    if copies < 1:
        return None
    parts: list[str] = []
    for level in outer_tree.levels:
        if parts:
            parts.append(NEW_LEVEL)
        for _ in range(copies):
            parts.extend(node.token for node in level)
    for level in inner_tree.levels:
        parts.append(NEW_LEVEL)
        parts.extend(node.token for node in level)
    tokens = tuple(parts) + (EOS,)
    if len(tokens) > MAX_SEQUENCE_LENGTH + 1:
        return None
    try:
        parse(tokens, version)
    except Exception:
        return None
    return tokens


def execution_guided_solve(
    task: Task, source: GuidanceSource, config: SearchConfig
) -> SearchResult:
    """Stage 1 runs the flat probability-space search; on failure the search
    re-launches on the most promising distinct intermediate grids from the
    evaluation trace, composing the outer sub-program with the inner solution."""
    deadline = time.perf_counter() + config.timeout
    return _execution_guided(task, source, config, config.stages, deadline)


def _execution_guided(
    task: Task, source: GuidanceSource, config: SearchConfig, stages: int, deadline: float
) -> SearchResult:
    start = time.perf_counter()
    remaining = max(0.0, deadline - start)
    stage_config = replace(config, collect_trace=stages > 1, timeout=remaining)
    result = gridcoder_solve(task, source, stage_config)
    if result.found or stages <= 1:
        return result

    targets = [y for _, y in task.support]
    entries = sorted(
        result.trace,
        key=lambda e: (-e.joint_prob, -e.similarity, e.sub_tokens),
    )[: config.fan_out]
    evaluated = result.stats.programs_evaluated
    for entry in entries:
        if time.perf_counter() > deadline:
            break
        try:
            derived = Task(support=tuple(zip(entry.grids, targets)))
        except Exception:
            continue
        inner = _execution_guided(derived, source, config, stages - 1, deadline)
        evaluated += inner.stats.programs_evaluated
        if not inner.found:
            continue
        composed = compose_programs(entry.sub_tokens, inner.program, config.dsl_version)
        if composed is None:
            continue
        check = check_program(composed, task, config.dsl_version)
        if check.status == "solved":
            stats = replace(
                result.stats,
                programs_evaluated=evaluated,
                wall_time=time.perf_counter() - start,
            )
            return SearchResult(
                "found",
                program=composed,
                joint_prob=entry.joint_prob * (inner.joint_prob or 1.0),
                rank=evaluated,
                color_binding=check.color_binding,
                stats=stats,
            )
    result.stats.programs_evaluated = evaluated
    result.stats.wall_time = time.perf_counter() - start
    return result


# ------------------------------------------------------------------ facade

ENGINES = {
    "gridcoder": gridcoder_solve,
    "gridcoder_cond": gridcoder_cond_solve,
    "greedy_decode": greedy_decode_solve,
    "mcts": mcts_solve,
    "lgs_greedy": lgs_greedy_solve,
    "execution_guided": execution_guided_solve,
}


def solve_task(
    task: Task,
    engine: str,
    source: Optional[GuidanceSource],
    config: SearchConfig,
) -> SearchResult:
    """Uniform invocation contract used by the CLI and benchmark harness."""
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}; choose from {sorted(ENGINES)}")
    if engine == "lgs_greedy":
        return lgs_greedy_solve(task, config)
    if source is None:
        raise ConfigError(f"engine {engine!r} needs a guidance source")
    return ENGINES[engine](task, source, config)
