"""Token sequences, the sequence <-> syntax-tree codec, and program evaluation.

A program is a flat token sequence read left to right.  ``<NewLevel>``
separates tree levels (built bottom-up), ``<Identity>`` forwards a value
unchanged, and ``<EOS>`` terminates the sequence.  Within a level each node
greedily consumes the previous level's outputs left to right, one per unit of
arity; level-0 nodes read the task input grid once per Grid parameter.  A node
sitting in a ``for_each`` lambda slot is reinterpreted as an unapplied unary
primitive; such nodes must be leaves, so lambdas only ever appear at level 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from . import dsl
from .dsl import FunctionRef, PrimitiveSpec, ValueKind
from .errors import (
    EvalError,
    FormatError,
    MalformedGrid,
    ProgramSyntaxError,
    ProgramTypeError,
)
from .grid import MAX_TASK_SIDE, Grid

EOS = "<EOS>"
NEW_LEVEL = "<NewLevel>"
IDENTITY = "<Identity>"
SOS = "<SOS>"

SPECIAL_TOKENS = (NEW_LEVEL, IDENTITY, EOS)

MAX_SEQUENCE_LENGTH = 40

TokenSequence = tuple[str, ...]


def vocabulary(version: int) -> tuple[str, ...]:
    """Token classes a guidance source scores: registry order, then specials."""
    return tuple(s.name for s in dsl.registry(version)) + SPECIAL_TOKENS


@dataclass(frozen=True)
class Task:
    """Support pairs drive the search; query pairs confirm the found program."""

    support: tuple[tuple[Grid, Grid], ...]
    query: tuple[tuple[Grid, Grid], ...] = ()
    task_id: str = ""

    def __post_init__(self):
        if not self.support:
            raise ValueError("a task needs at least one support pair")
        for grid_in, grid_out in list(self.support) + list(self.query):
            for g in (grid_in, grid_out):
                if max(g.width, g.height) > MAX_TASK_SIDE:
                    raise MalformedGrid(
                        f"task-facing grid {g.width}x{g.height} exceeds {MAX_TASK_SIDE}"
                    )

    def content_key(self) -> bytes:
        parts = []
        for a, b in list(self.support) + [(None, None)] + list(self.query):
            parts.append(a.content_key() if a is not None else b"|")
            parts.append(b.content_key() if b is not None else b"|")
        return b"".join(parts)


@dataclass
class Node:
    token: str  # primitive name or IDENTITY
    children: tuple[int, ...]  # indices into the previous level
    kind: ValueKind
    spec: Optional[PrimitiveSpec] = None
    is_lambda: bool = False


@dataclass
class ProgramTree:
    levels: list[list[Node]]
    version: int
    tokens: TokenSequence = field(default=())

    @property
    def node_count(self) -> int:
        return sum(len(level) for level in self.levels)


def truncate_at_eos(tokens: Sequence[str]) -> TokenSequence:
    """Tokens up to (excluding) the first EOS; anything later never matters."""
    out = []
    for t in tokens:
        if t == EOS:
            break
        out.append(t)
    return tuple(out)


def _split_levels(tokens: TokenSequence) -> list[list[str]]:
    levels: list[list[str]] = [[]]
    for t in tokens:
        if t == NEW_LEVEL:
            levels.append([])
        else:
            levels[-1].append(t)
    return levels


def _arity(token: str, table: dict[str, PrimitiveSpec]) -> int:
    if token == IDENTITY:
        return 1
    return len(table[token].param_kinds)


def parse(tokens: Iterable[str], version: int = 1) -> ProgramTree:
    """Decode a token sequence into a validated syntax tree.

    Raises ProgramSyntaxError when level arities do not line up and
    ProgramTypeError when an edge violates the primitive signatures.
    """
    tokens = truncate_at_eos(tuple(tokens))
    if not tokens:
        raise ProgramSyntaxError("empty program")
    table = dsl.by_name(version)
    for t in tokens:
        if t == SOS:
            raise ProgramSyntaxError("start-of-sentence token inside a program")
        if t != NEW_LEVEL and t != IDENTITY and t not in table:
            raise ProgramSyntaxError(f"unknown token {t!r}")

    token_levels = _split_levels(tokens)
    if any(len(level) == 0 for level in token_levels):
        raise ProgramSyntaxError("empty level in program")

    # Structure pass: assign children greedily left-to-right by arity.
    levels: list[list[Node]] = []
    for depth, level_tokens in enumerate(token_levels):
        nodes = []
        cursor = 0
        for t in level_tokens:
            arity = _arity(t, table)
            if depth == 0:
                children: tuple[int, ...] = ()
            else:
                children = tuple(range(cursor, cursor + arity))
                cursor += arity
            nodes.append(Node(t, children, ValueKind.GRID, table.get(t)))
        if depth > 0 and cursor != len(levels[depth - 1]):
            raise ProgramSyntaxError(
                f"level {depth} consumes {cursor} values but level {depth - 1} "
                f"produced {len(levels[depth - 1])}"
            )
        levels.append(nodes)

    if len(levels[-1]) != 1:
        raise ProgramSyntaxError("final level must produce exactly one output")

    # Kind pass: level 0 reads the task input, lambda slots reinterpret leaves.
    for node in levels[0]:
        if node.token == IDENTITY:
            node.kind = ValueKind.GRID
        else:
            node.kind = dsl.result_kind(node.spec, [ValueKind.GRID] * len(node.spec.param_kinds))

    for depth in range(1, len(levels)):
        below = levels[depth - 1]
        for node in levels[depth]:
            if node.token == IDENTITY:
                child = below[node.children[0]]
                if child.is_lambda:
                    raise ProgramTypeError("Identity cannot forward an unapplied lambda")
                node.kind = child.kind
                continue
            spec = node.spec
            child_kinds = []
            for slot, child_idx in enumerate(node.children):
                child = below[child_idx]
                if spec.param_kinds[slot] is ValueKind.FUNCTION:
                    if depth != 1 or child.token == IDENTITY or child.spec is None:
                        raise ProgramTypeError(
                            f"{spec.name} lambda slot must hold a unary primitive leaf"
                        )
                    if not dsl.lambda_eligible(child.spec):
                        raise ProgramTypeError(
                            f"{child.token} cannot be used as a lambda"
                        )
                    child.is_lambda = True
                    child.kind = ValueKind.FUNCTION
                    child_kinds.append(ValueKind.FUNCTION)
                    continue
                if child.is_lambda:
                    raise ProgramTypeError(
                        f"{child.token} is consumed as a lambda elsewhere"
                    )
                if not dsl.accepts(spec, slot, child.kind):
                    raise ProgramTypeError(
                        f"{spec.name} argument {slot} expects "
                        f"{spec.param_kinds[slot].value}, got {child.kind.value}"
                    )
                child_kinds.append(child.kind)
            if spec.name == "for_each":
                node.kind = dsl.for_each_result_kind(below[node.children[1]].spec)
            else:
                node.kind = dsl.result_kind(spec, child_kinds)

    # Level-0 sanity: every non-lambda leaf must be computable from the input grid.
    for node in levels[0]:
        if node.token == IDENTITY or node.is_lambda:
            continue
        if any(k is not ValueKind.GRID for k in node.spec.param_kinds):
            raise ProgramTypeError(
                f"{node.token} cannot appear at level 0: it does not read the input grid"
            )

    if levels[-1][0].kind is not ValueKind.GRID:
        raise ProgramTypeError(
            f"program output kind is {levels[-1][0].kind.value}, must be Grid"
        )

    seq = tuple(tokens) + (EOS,)
    if len(seq) > MAX_SEQUENCE_LENGTH + 1:
        raise ProgramSyntaxError(f"program longer than {MAX_SEQUENCE_LENGTH} tokens")
    return ProgramTree(levels, version, seq)


def encode(tree: ProgramTree) -> TokenSequence:
    """Emit levels bottom-up, nodes left-to-right, with level separators and EOS."""
    parts: list[str] = []
    for depth, level in enumerate(tree.levels):
        if not level:
            raise ProgramSyntaxError("cannot encode a tree with an empty level")
        if depth:
            parts.append(NEW_LEVEL)
        parts.extend(node.token for node in level)
    return tuple(parts) + (EOS,)


def evaluate(
    tree: ProgramTree,
    grid_in: Grid,
    color_binding: Optional[tuple[int, int]] = None,
) -> Grid:
    """Run the program on one input grid and return the final Grid."""
    values = _run(tree, grid_in, color_binding)
    return values[-1][1]


def intermediate_outputs(
    tree: ProgramTree,
    grid_in: Grid,
    color_binding: Optional[tuple[int, int]] = None,
) -> list[tuple[tuple[int, int], object]]:
    """Every node's output value in execution order, keyed by (level, index).

    An evaluation error truncates the trace at the failing node and the
    partial trace is returned.
    """
    try:
        return _run(tree, grid_in, color_binding)
    except EvalError as err:
        return getattr(err, "partial_trace", [])


def _run(tree, grid_in, color_binding):
    trace: list[tuple[tuple[int, int], object]] = []
    previous: list[object] = []
    for depth, level in enumerate(tree.levels):
        current: list[object] = []
        for idx, node in enumerate(level):
            try:
                value = _eval_node(node, depth, previous, grid_in, color_binding)
            except EvalError as err:
                err.partial_trace = trace  # type: ignore[attr-defined]
                err.failing_node = (depth, idx)  # type: ignore[attr-defined]
                raise
            current.append(value)
            trace.append(((depth, idx), value))
        previous = current
    return trace


def _eval_node(node, depth, previous, grid_in, color_binding):
    if node.is_lambda:
        return FunctionRef(node.spec)
    if node.token == IDENTITY:
        return grid_in if depth == 0 else previous[node.children[0]]
    if depth == 0:
        args = [grid_in] * len(node.spec.param_kinds)
    else:
        args = [previous[i] for i in node.children]
    return dsl.apply_primitive(node.spec, args, latent=color_binding)


@dataclass(frozen=True)
class CheckResult:
    status: str  # "solved" | "failed" | "error"
    color_binding: Optional[tuple[int, int]] = None
    reason: str = ""


def _needs_color_binding(tree: ProgramTree) -> bool:
    return any(
        node.spec is not None and node.spec.needs_latent
        for level in tree.levels
        for node in level
    )


def check_program(tokens: Iterable[str], task: Task, version: int = 1) -> CheckResult:
    """Evaluate a candidate program against the task's support pairs.

    "solved" means every support output is reproduced exactly.  Programs with
    ``color_change`` are tried under every (from, to) binding; the first
    lexicographic binding consistent with all support pairs is reported.
    Never raises: syntax, type, and evaluation failures all map to "error".
    """
    try:
        tree = parse(tokens, version)
    except (ProgramSyntaxError, ProgramTypeError) as err:
        return CheckResult("error", reason=str(err))

    bindings: list[Optional[tuple[int, int]]]
    if _needs_color_binding(tree):
        bindings = list(dsl.resolve_color_change())
    else:
        bindings = [None]

    any_evaluated = False
    for binding in bindings:
        matched = True
        evaluated = True
        for grid_in, grid_out in task.support:
            try:
                result = evaluate(tree, grid_in, binding)
            except EvalError:
                evaluated = False
                matched = False
                break
            if result != grid_out:
                matched = False
                break
        any_evaluated = any_evaluated or evaluated
        if matched:
            return CheckResult("solved", color_binding=binding)
    if not any_evaluated:
        return CheckResult("error", reason="evaluation failed on every binding")
    return CheckResult("failed")


def tokens_to_json(tokens: Sequence[str]) -> list[str]:
    return list(tokens)


def tokens_from_json(data) -> TokenSequence:
    if not isinstance(data, list) or not all(isinstance(t, str) for t in data):
        raise FormatError("token sequence must be a JSON array of strings")
    return tuple(data)
