"""Probability spaces over token positions and the sources that produce them.

A ProbSpace is a positions x vocabulary matrix: one next-token distribution
per sequence position, under the simplifying assumption that positions are
conditionally independent.  Sources produce one distribution at a time given
(task, example index, prefix); the decode loop below turns a source into a
ProbSpace, and bootstrapping averages several decodes with randomized example
indices and forced one- or two-token prefixes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import EvalError, FormatError, GridSynthError, VocabError
from .grid import Grid, pixelwise_similarity
from .program import (
    EOS,
    MAX_SEQUENCE_LENGTH,
    Task,
    TokenSequence,
    evaluate,
    parse,
    truncate_at_eos,
    vocabulary,
)

ROW_SUM_TOLERANCE = 1e-6


@dataclass
class ProbSpace:
    """One probability row per decoded token position."""

    vocab: tuple[str, ...]
    rows: np.ndarray  # shape (positions, len(vocab))

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.vocab):
            raise FormatError(
                f"rows must be (positions, {len(self.vocab)}), got {self.rows.shape}"
            )
        if self.rows.min(initial=0.0) < -1e-12 or self.rows.max(initial=0.0) > 1 + 1e-12:
            raise FormatError("probabilities must lie in [0, 1]")
        sums = self.rows.sum(axis=1)
        if len(sums) and np.abs(sums - 1.0).max() > ROW_SUM_TOLERANCE:
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise FormatError(f"row {worst} sums to {sums[worst]:.8f}, expected 1")

    @property
    def positions(self) -> int:
        return self.rows.shape[0]

    def token_id(self, token: str) -> int:
        return self.vocab.index(token)

    def classes_above(self, position: int, tau: float) -> np.ndarray:
        return np.nonzero(self.rows[position] > tau)[0]


@runtime_checkable
class GuidanceSource(Protocol):
    """Next-token distribution provider; deterministic given (task, idx, prefix)."""

    vocab: tuple[str, ...]
    supports_prefix_conditioning: bool

    def next_token_distribution(
        self, task: Task, idx: int, prefix: TokenSequence
    ) -> np.ndarray: ...


class UniformGuidance:
    """Flat prior over the whole vocabulary; the know-nothing baseline."""

    supports_prefix_conditioning = True

    def __init__(self, version: int = 1):
        self.vocab = vocabulary(version)

    def next_token_distribution(self, task, idx, prefix) -> np.ndarray:
        return np.full(len(self.vocab), 1.0 / len(self.vocab))


class OracleGuidance:
    """Emits the planted ground-truth token with mass 1 - epsilon and leaks
    epsilon uniformly over a per-position sampled distractor set.

    ``profile`` overrides epsilon (or ``(epsilon, n_distractors)``) at chosen
    positions, which models the low-entropy "structure" versus high-entropy
    "transform" split seen in trained guidance.
    """

    supports_prefix_conditioning = True

    def __init__(
        self,
        truth: Sequence[str],
        version: int = 1,
        epsilon: float = 0.0,
        n_distractors: int = 5,
        profile: Optional[dict[int, object]] = None,
        seed: int = 0,
    ):
        if not (0.0 <= epsilon < 1.0):
            raise ValueError("epsilon must be in [0, 1)")
        self.vocab = vocabulary(version)
        truth = tuple(truth)
        if EOS not in truth:
            truth = truth + (EOS,)
        self.truth = truncate_at_eos(truth) + (EOS,)
        self.epsilon = epsilon
        self.n_distractors = n_distractors
        self.profile = dict(profile or {})
        self.seed = seed
        self._ids = {t: i for i, t in enumerate(self.vocab)}

    def _position_noise(self, position: int) -> tuple[float, int]:
        override = self.profile.get(position)
        if override is None:
            return self.epsilon, self.n_distractors
        if isinstance(override, tuple):
            return float(override[0]), int(override[1])
        return float(override), self.n_distractors

    def next_token_distribution(self, task, idx, prefix) -> np.ndarray:
        position = len(prefix)
        token = self.truth[position] if position < len(self.truth) else EOS
        truth_id = self._ids[token]
        epsilon, n = self._position_noise(position)
        probs = np.zeros(len(self.vocab))
        if epsilon <= 0.0 or n <= 0:
            probs[truth_id] = 1.0
            return probs
        rng = np.random.default_rng((self.seed, idx, position))
        pool = np.delete(np.arange(len(self.vocab)), truth_id)
        distractors = rng.choice(pool, size=min(n, len(pool)), replace=False)
        probs[truth_id] = 1.0 - epsilon
        probs[distractors] += epsilon / len(distractors)
        return probs


class TableGuidance:
    """File-backed per-task ProbSpace; lookup depends only on the position.

    This deliberately drops prefix conditioning: the table *is* the flat
    conditional-independence representation, so prefix-tree search cannot use
    it.
    """

    supports_prefix_conditioning = False

    def __init__(self, space: ProbSpace, task_id: str = ""):
        self.space = space
        self.task_id = task_id
        self.vocab = space.vocab
        self._eos_row = np.zeros(len(space.vocab))
        self._eos_row[space.vocab.index(EOS)] = 1.0

    def next_token_distribution(self, task, idx, prefix) -> np.ndarray:
        position = len(prefix)
        if position >= self.space.positions:
            return self._eos_row
        return self.space.rows[position]

    @classmethod
    def from_file(cls, path, version: int = 1) -> "TableGuidance":
        task_id, space = load_prob_table(path, expected_vocab=vocabulary(version))
        return cls(space, task_id)


def _soft_similarity(a: Grid, b: Grid) -> float:
    """Shape-tolerant similarity used only to weight guidance mixtures."""
    if a.cells.shape == b.cells.shape:
        return pixelwise_similarity(a, b)
    mh = min(a.height, b.height)
    mw = min(a.width, b.width)
    overlap = float(np.mean(a.cells[:mh, :mw] == b.cells[:mh, :mw]))
    area_ratio = (mh * mw) / (max(a.height, b.height) * max(a.width, b.width))
    return 0.9 * overlap * area_ratio


class RestrictedSetGuidance:
    """Synthetic trained-model stand-in covering a fixed set of programs.

    Given a task it scores every covered program by how close its output gets
    to the support targets, then emits per-position token distributions as the
    score-weighted mixture of the covered sequences.  Programs that solve the
    task outright absorb most of the mass, so in-coverage tasks decode almost
    one-hot while out-of-coverage tasks yield a broad mixture confined to the
    covered structures.
    """

    def __init__(
        self,
        programs: Sequence[TokenSequence],
        version: int = 1,
        power: float = 8.0,
        floor: float = 1e-4,
        solver_mass: float = 0.98,
        conditional: bool = False,
        group_slices: Optional[Sequence[tuple[int, int, float]]] = None,
    ):
        self.vocab = vocabulary(version)
        self.version = version
        self.power = power
        self.floor = floor
        self.solver_mass = solver_mass
        self.conditional = conditional
        self.supports_prefix_conditioning = True
        self.programs: list[TokenSequence] = []
        self._trees = []
        for prog in programs:
            seq = truncate_at_eos(tuple(prog)) + (EOS,)
            self._trees.append(parse(seq, version))
            self.programs.append(seq)
        if group_slices is None:
            group_slices = [(0, len(self.programs), 1.0)]
        self.group_slices = list(group_slices)
        self._ids = {t: i for i, t in enumerate(self.vocab)}
        self._weight_cache: dict[bytes, np.ndarray] = {}

    @classmethod
    def from_groups(
        cls,
        groups: Sequence[tuple[Sequence[TokenSequence], float]],
        **kwargs,
    ) -> "RestrictedSetGuidance":
        """Build from (programs, mass) groups.  Each group keeps a fixed share
        of the total probability mass; similarity only redistributes weight
        within a group.  This mirrors the near-one-hot structure tokens a
        trained model emits once it recognizes the task category."""
        programs: list[TokenSequence] = []
        slices: list[tuple[int, int, float]] = []
        for seqs, mass in groups:
            start = len(programs)
            programs.extend(seqs)
            slices.append((start, len(programs), float(mass)))
        return cls(programs, group_slices=slices, **kwargs)

    def _weights(self, task: Task) -> np.ndarray:
        key = task.content_key()
        cached = self._weight_cache.get(key)
        if cached is not None:
            return cached
        sims = np.zeros(len(self.programs))
        solved = np.zeros(len(self.programs), dtype=bool)
        for i, tree in enumerate(self._trees):
            total, exact = 0.0, True
            try:
                for grid_in, grid_out in task.support:
                    out = evaluate(tree, grid_in)
                    total += _soft_similarity(out, grid_out)
                    exact = exact and out == grid_out
            except GridSynthError:
                sims[i] = 0.0
                solved[i] = False
            else:
                sims[i] = total / len(task.support)
                solved[i] = exact
        raw = sims**self.power + self.floor
        weights = np.zeros_like(raw)
        total_mass = sum(mass for _, _, mass in self.group_slices)
        for start, end, mass in self.group_slices:
            segment = raw[start:end]
            weights[start:end] = (mass / total_mass) * segment / segment.sum()
        if solved.any():
            weights *= 1.0 - self.solver_mass
            weights[solved] += self.solver_mass / solved.sum()
        self._weight_cache[key] = weights
        return weights

    def _token_at(self, program: TokenSequence, position: int) -> str:
        return program[position] if position < len(program) else EOS

    def next_token_distribution(self, task, idx, prefix) -> np.ndarray:
        weights = self._weights(task)
        position = len(prefix)
        if self.conditional:
            mask = np.array(
                [
                    all(self._token_at(p, j) == prefix[j] for j in range(position))
                    for p in self.programs
                ]
            )
            weights = weights * mask
            if weights.sum() <= 0:
                return np.full(len(self.vocab), 1.0 / len(self.vocab))
            weights = weights / weights.sum()
        probs = np.zeros(len(self.vocab))
        for w, prog in zip(weights, self.programs):
            probs[self._ids[self._token_at(prog, position)]] += w
        return probs


# ------------------------------------------------------------- decode loops

def get_prob_space(
    source: GuidanceSource,
    task: Task,
    idx: int = 0,
    seq: TokenSequence = (),
    tau: float = 0.02,
    max_len: int = MAX_SEQUENCE_LENGTH,
) -> ProbSpace:
    """Greedy decode loop: follow the argmax token, but when the argmax is the
    end-of-sentence while another class still clears tau, continue with the
    second most probable class.  Stops when EOS is the only class above tau or
    the length cap is reached.  Returns one row per decoded position (the
    forced ``seq`` prefix is not re-predicted)."""
    if idx >= len(task.support):
        raise ValueError(f"example index {idx} out of range")
    if len(seq) >= max_len:
        raise ValueError("starting sequence already at maximum length")
    vocab = tuple(source.vocab)
    eos_id = vocab.index(EOS)
    decoded = list(seq)
    rows = []
    while len(decoded) < max_len:
        probs = np.asarray(source.next_token_distribution(task, idx, tuple(decoded)))
        rows.append(probs)
        best = int(np.argmax(probs))
        if best == eos_id:
            above = np.nonzero(probs > tau)[0]
            if len(above) <= 1 and (len(above) == 0 or above[0] == eos_id):
                break
            order = np.argsort(-probs, kind="stable")
            best = int(order[1])
        decoded.append(vocab[best])
    return ProbSpace(vocab, np.stack(rows))


def bootstrap_prob_space(
    source: GuidanceSource,
    task: Task,
    bootstrap_k: int = 6,
    tau: float = 0.02,
    max_len: int = MAX_SEQUENCE_LENGTH,
    seed: int = 0,
) -> ProbSpace:
    """Average ``bootstrap_k`` extra decodes over the base decode.

    Each extra run picks a uniformly random support example and forces a
    random prefix of one or two tokens drawn from the classes above tau at the
    base decode's first positions; a run with prefix length p contributes only
    to positions >= p.  K=0 returns the base decode unchanged.
    """
    base = get_prob_space(source, task, idx=0, seq=(), tau=tau, max_len=max_len)
    if bootstrap_k <= 0:
        return base
    vocab = base.vocab
    eos_id = vocab.index(EOS)
    rows = [row.copy() for row in base.rows]
    counts = [1] * len(rows)
    rng = np.random.default_rng(seed)
    for _ in range(bootstrap_k):
        idx = int(rng.integers(len(task.support)))
        max_prefix = 2 if base.positions >= 2 else 1
        want = int(rng.integers(1, max_prefix + 1))
        prefix: list[str] = []
        for position in range(want):
            choices = [i for i in base.classes_above(position, tau) if i != eos_id]
            if not choices:
                fallback = int(np.argmax(base.rows[position]))
                if fallback == eos_id:
                    break
                choices = [fallback]
            prefix.append(vocab[int(rng.choice(choices))])
        if not prefix:
            continue
        extra = get_prob_space(source, task, idx=idx, seq=tuple(prefix), tau=tau, max_len=max_len)
        for j, row in enumerate(extra.rows):
            position = len(prefix) + j
            if position < len(rows):
                rows[position] = rows[position] + row
                counts[position] += 1
            else:
                rows.append(row.copy())
                counts.append(1)
    averaged = np.stack([row / count for row, count in zip(rows, counts)])
    return ProbSpace(vocab, averaged)


# ------------------------------------------------------------------ file io

def save_prob_table(path, space: ProbSpace, task_id: str = "") -> None:
    payload = {
        "task_id": task_id,
        "vocab": list(space.vocab),
        "rows": [[float(x) for x in row] for row in space.rows],
    }
    Path(path).write_text(json.dumps(payload))


def load_prob_table(path, expected_vocab: Optional[Sequence[str]] = None):
    """Read a probability-table JSON file; returns (task_id, ProbSpace)."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise FormatError(f"not valid JSON: {err}") from err
    if not isinstance(payload, dict):
        raise FormatError("table file must hold a JSON object")
    for field_name in ("task_id", "vocab", "rows"):
        if field_name not in payload:
            raise FormatError(f"missing field {field_name!r}")
    vocab = payload["vocab"]
    if not isinstance(vocab, list) or not all(isinstance(t, str) for t in vocab):
        raise FormatError("vocab must be a list of token names")
    rows = payload["rows"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise FormatError("rows must be a list of probability rows")
    if expected_vocab is not None and tuple(vocab) != tuple(expected_vocab):
        unknown = set(vocab) - set(expected_vocab)
        if unknown:
            raise VocabError(f"unknown token names: {sorted(unknown)}")
        raise VocabError("table vocabulary does not match the registry vocabulary")
    for r in rows:
        if len(r) != len(vocab) or not all(isinstance(x, (int, float)) for x in r):
            raise FormatError("each row must list one number per vocab entry")
    space = ProbSpace(tuple(vocab), np.asarray(rows, dtype=np.float64))
    task_id = payload["task_id"]
    if not isinstance(task_id, str):
        raise FormatError("task_id must be a string")
    return task_id, space
