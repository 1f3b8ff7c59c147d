"""Procedural task generators.

Each generator emits a ``GeneratedSample``: a task plus the ground-truth
token sequence, with the defining contract that evaluating the truth program
reproduces every support and query output.  Generators are pure functions of
their config seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import dsl
from .errors import FormatError, InvalidConfig
from .grid import MAX_TASK_SIDE, Grid, grid_from_rows, grid_to_rows, random_cells
from .program import (
    EOS,
    IDENTITY,
    NEW_LEVEL,
    Task,
    TokenSequence,
    evaluate,
    parse,
    truncate_at_eos,
)

MAX_BUILD_TRIES = 200


@dataclass(frozen=True)
class GeneratorConfig:
    n_support: int = 3
    n_query: int = 1
    min_size: int = 3
    max_size: int = 10
    density: float = 0.45
    palette: tuple[int, ...] = tuple(range(1, 10))
    seed: int = 0
    dsl_version: int = 1
    tiling_transforms: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.n_support < 2:
            raise InvalidConfig("n_support must be at least 2")


@dataclass(frozen=True)
class GeneratedSample:
    task: Task
    truth: TokenSequence
    generator_id: str
    seed: int
    dsl_version: int

    def to_json(self) -> dict:
        def pairs(items):
            return [
                {"input": grid_to_rows(a), "output": grid_to_rows(b)} for a, b in items
            ]

        return {
            "task": {"train": pairs(self.task.support), "test": pairs(self.task.query)},
            "truth": list(self.truth),
            "generator": self.generator_id,
            "seed": self.seed,
            "dsl_version": self.dsl_version,
        }


def sample_from_json(data: dict) -> GeneratedSample:
    try:
        support = tuple(
            (grid_from_rows(p["input"]), grid_from_rows(p["output"]))
            for p in data["task"]["train"]
        )
        query = tuple(
            (grid_from_rows(p["input"]), grid_from_rows(p["output"]))
            for p in data["task"]["test"]
        )
        return GeneratedSample(
            task=Task(support=support, query=query),
            truth=tuple(data["truth"]),
            generator_id=data["generator"],
            seed=int(data["seed"]),
            dsl_version=int(data["dsl_version"]),
        )
    except (KeyError, TypeError) as err:
        raise FormatError(f"malformed dataset line: {err}") from err


def write_dataset(path, samples: Sequence[GeneratedSample]) -> None:
    with open(path, "w") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_json()) + "\n")


def read_dataset(path) -> list[GeneratedSample]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(sample_from_json(json.loads(line)))
    return out


# ----------------------------------------------------------------- plumbing

def _rng(config: GeneratorConfig, salt: int) -> np.random.Generator:
    return np.random.default_rng((config.seed, salt))


def _build_sample(
    config: GeneratorConfig,
    generator_id: str,
    truth: TokenSequence,
    make_input: Callable[[np.random.Generator], Grid],
    rng: np.random.Generator,
    binding: Optional[tuple[int, int]] = None,
    reject_identity: bool = True,
) -> GeneratedSample:
    """Assemble a sample by drawing inputs until the truth program evaluates
    cleanly and yields task-sized outputs on every pair."""
    tree = parse(truth, config.dsl_version)
    pairs: list[tuple[Grid, Grid]] = []
    needed = config.n_support + config.n_query
    tries = 0
    while len(pairs) < needed:
        tries += 1
        if tries > MAX_BUILD_TRIES:
            raise InvalidConfig(
                f"{generator_id}: could not build a valid task for seed {config.seed}"
            )
        try:
            grid_in = make_input(rng)
            grid_out = evaluate(tree, grid_in, binding)
        except Exception:
            continue
        if max(grid_out.width, grid_out.height) > MAX_TASK_SIDE:
            continue
        if reject_identity and grid_out == grid_in and tries < MAX_BUILD_TRIES // 2:
            continue
        pairs.append((grid_in, grid_out))
    return GeneratedSample(
        task=Task(support=tuple(pairs[: config.n_support]), query=tuple(pairs[config.n_support :])),
        truth=truncate_at_eos(truth) + (EOS,),
        generator_id=generator_id,
        seed=config.seed,
        dsl_version=config.dsl_version,
    )


def _random_input(config: GeneratorConfig, rng: np.random.Generator, lo=None, hi=None,
                  w_multiple: int = 1, h_multiple: int = 1) -> Grid:
    lo = config.min_size if lo is None else lo
    hi = config.max_size if hi is None else hi
    w = int(rng.integers(lo, hi + 1)) * w_multiple
    h = int(rng.integers(lo, hi + 1)) * h_multiple
    return Grid(random_cells(rng, w, h, config.density, config.palette))


def levels_to_tokens(levels: Sequence[Sequence[str]]) -> TokenSequence:
    parts: list[str] = []
    for i, level in enumerate(levels):
        if i:
            parts.append(NEW_LEVEL)
        parts.extend(level)
    return tuple(parts) + (EOS,)


# ------------------------------------------------------------ trivial tasks

_PROBE_SEEDS = tuple(range(32))


@lru_cache(maxsize=None)
def _probe_grids() -> tuple[Grid, ...]:
    grids = []
    for seed in _PROBE_SEEDS:
        rng = np.random.default_rng((9173, seed))
        w = int(rng.integers(4, 13))
        h = int(rng.integers(4, 13))
        grids.append(Grid(random_cells(rng, w, h, 0.55, tuple(range(1, 10)))))
    return tuple(grids)


def single_primitive_names(version: int) -> list[str]:
    return [s.name for s in dsl.unary_grid_primitives(version)]


@lru_cache(maxsize=None)
def curated_two_chains(version: int = 1) -> tuple[tuple[str, str], ...]:
    """Ordered unary pairs that survive semantic redundancy filtering.

    A pair (p, q), meaning q applied after p, is dropped when on the probe
    grids it is equivalent to the identity or collapses to any single unary
    primitive, or when it fails to evaluate on most probes.
    """
    table = dsl.by_name(version)
    moves = [s for s in dsl.unary_grid_primitives(version) if not s.needs_latent]
    probes = _probe_grids()

    def signature(outputs: dict[int, Grid]) -> tuple:
        return tuple(sorted((i, g.content_key()) for i, g in outputs.items()))

    single_outputs: dict[str, dict[int, Grid]] = {}
    for spec in moves:
        outs = {}
        for i, probe in enumerate(probes):
            try:
                outs[i] = dsl.apply_primitive(spec, [probe])
            except Exception:
                continue
        single_outputs[spec.name] = outs

    known = {signature({i: g for i, g in enumerate(probes)}): "<identity>"}
    for name, outs in single_outputs.items():
        known.setdefault(signature(outs), name)

    kept = []
    for p in moves:
        for q in moves:
            outs = {}
            for i, mid in single_outputs[p.name].items():
                try:
                    outs[i] = dsl.apply_primitive(table[q.name], [mid])
                except Exception:
                    continue
            if len(outs) < len(probes) // 2:
                continue
            if signature(outs) in known:
                continue
            kept.append((p.name, q.name))
    return tuple(kept)


def gen_trivial(config: GeneratorConfig) -> GeneratedSample:
    """One-primitive tasks and curated two-primitive compositions."""
    rng = _rng(config, 11)
    singles = single_primitive_names(config.dsl_version)
    binding = None
    if rng.random() < 0.5:
        name = singles[int(rng.integers(len(singles)))]
        truth = (name, EOS)
        if name == "color_change":
            frm = int(rng.choice(config.palette))
            to = int(rng.choice([c for c in range(10) if c != frm]))
            binding = (frm, to)
    else:
        pairs = curated_two_chains(config.dsl_version)
        p, q = pairs[int(rng.integers(len(pairs)))]
        truth = (p, NEW_LEVEL, q, EOS)

    def make_input(r):
        lo = int(r.integers(1, 5))
        hi = int(r.integers(lo + 1, 13))
        g = _random_input(config, r, lo=lo, hi=hi)
        if binding is not None and not np.any(g.cells == binding[0]):
            cells = g.cells.copy()
            cells[int(r.integers(g.height)), int(r.integers(g.width))] = binding[0]
            g = Grid(cells)
        return g

    return _build_sample(config, "trivial", truth, make_input, rng, binding=binding)


# -------------------------------------------------------------- split-merge

_SPLITS = {
    ("h", 2): ("lefthalf", "righthalf"),
    ("h", 3): ("leftthird", "vcenterthird", "rightthird"),
    ("h", 4): ("hfirstfourth", "hsecondfourth", "hthirdfourth", "hlastfourth"),
    ("v", 2): ("tophalf", "bottomhalf"),
    ("v", 3): ("topthird", "hcenterthird", "bottomthird"),
    ("v", 4): ("vfirstfourth", "vsecondfourth", "vthirdfourth", "vlastfourth"),
    ("quad", 4): ("first_quadrant", "second_quadrant", "third_quadrant", "fourth_quadrant"),
}

_MERGE_OPS = ("cellwiseOR", "cellwiseXOR", "cellwiseAND", "cellwiseNOR", "cellwiseDifference")

_SAFE_POST = ("rot90", "rot180", "rot270", "hmirror", "vmirror", "invert_colors",
              "gravitate_left", "gravitate_down", "shift_right", "set_fg_color3")


def split_merge_tokens(split: tuple[str, int], op: str, post: Optional[str] = None) -> TokenSequence:
    parts = _SPLITS[split]
    levels: list[list[str]] = [list(parts)]
    if len(parts) == 2:
        levels.append([op])
    elif len(parts) == 3:
        levels.append([IDENTITY, op])
        levels.append([op])
    else:
        levels.append([op, op])
        levels.append([op])
    if post:
        levels.append([post])
    return levels_to_tokens(levels)


def gen_split_merge(config: GeneratorConfig) -> GeneratedSample:
    rng = _rng(config, 23)
    split = list(_SPLITS)[int(rng.integers(len(_SPLITS)))]
    op = _MERGE_OPS[int(rng.integers(len(_MERGE_OPS)))]
    post = _SAFE_POST[int(rng.integers(len(_SAFE_POST)))] if rng.random() < 0.4 else None
    truth = split_merge_tokens(split, op, post)
    axis, ways = split

    def make_input(r):
        piece = int(r.integers(2, 7))
        other = int(r.integers(2, 11))
        if axis == "h":
            w, h = piece * ways, other
        elif axis == "v":
            w, h = other, piece * ways
        else:
            w, h = piece * 2, int(r.integers(2, 7)) * 2
        return Grid(random_cells(r, w, h, config.density, config.palette))

    return _build_sample(config, "split_merge", truth, make_input, rng)


# ------------------------------------------------------------------- tiling

TILE_TRANSFORMS = (IDENTITY, "hmirror", "vmirror", "rot90", "rot180", "rot270")
_SHAPE_PRESERVING = (IDENTITY, "hmirror", "vmirror", "rot180")


def _hchain_levels(n: int, concat: str) -> list[list[str]]:
    # Fold n leaves pairwise: 2 -> [op], 3 -> [op, Id], [op], 4 -> [op, op], [op],
    # 5 -> [op, op, Id], [op, Id], [op]  (the shapes printed in the paper's examples).
    levels = []
    count = n
    while count > 1:
        level = [concat] * (count // 2) + [IDENTITY] * (count % 2)
        levels.append(level)
        count = count // 2 + count % 2
    return levels


def tiling_tokens(template: str, transforms: Sequence[str]) -> TokenSequence:
    """Token sequence for one tiling template; transforms fill the leaves."""
    tfs = list(transforms)
    if template.startswith("h") or template.startswith("v"):
        n = int(template[1:])
        assert len(tfs) == n
        concat = "hconcat" if template.startswith("h") else "vconcat"
        return levels_to_tokens([tfs] + _hchain_levels(n, concat))
    if template == "grid2x2":
        assert len(tfs) == 4
        return levels_to_tokens([tfs, ["hconcat", "hconcat"], ["vconcat"]])
    if template == "grid2x4":
        assert len(tfs) == 8
        return levels_to_tokens(
            [tfs, ["hconcat"] * 4, ["hconcat", "hconcat"], ["vconcat"]]
        )
    if template == "grid3x3":
        assert len(tfs) == 9
        return levels_to_tokens(
            [
                tfs,
                ["hconcat", IDENTITY, "hconcat", IDENTITY, "hconcat", IDENTITY],
                ["hconcat", "hconcat", "hconcat"],
                ["vconcat", IDENTITY],
                ["vconcat"],
            ]
        )
    raise InvalidConfig(f"unknown tiling template {template!r}")


_TILING_TEMPLATES = ("grid2x2", "grid3x3", "h2", "h3", "h4", "v2", "v3", "v4")


def _tile_counts(template: str) -> tuple[int, int, int]:
    """(n_tiles, x_factor, y_factor) for output-size budgeting."""
    if template == "grid2x2":
        return 4, 2, 2
    if template == "grid2x4":
        return 8, 4, 2
    if template == "grid3x3":
        return 9, 3, 3
    n = int(template[1:])
    return (n, n, 1) if template.startswith("h") else (n, 1, n)


def gen_tiling(config: GeneratorConfig) -> GeneratedSample:
    rng = _rng(config, 37)
    template = _TILING_TEMPLATES[int(rng.integers(len(_TILING_TEMPLATES)))]
    allowed = config.tiling_transforms or TILE_TRANSFORMS
    n, fx, fy = _tile_counts(template)
    tfs = [allowed[int(rng.integers(len(allowed)))] for _ in range(n)]
    truth = tiling_tokens(template, tfs)
    square = any(t in ("rot90", "rot270") for t in tfs)

    def make_input(r):
        max_w = max(2, min(config.max_size, MAX_TASK_SIDE // fx))
        max_h = max(2, min(config.max_size, MAX_TASK_SIDE // fy))
        if square:
            side = int(r.integers(2, min(max_w, max_h) + 1))
            w = h = side
        else:
            w = int(r.integers(2, max_w + 1))
            h = int(r.integers(2, max_h + 1))
        return Grid(random_cells(r, w, h, config.density, config.palette))

    return _build_sample(config, "tiling", truth, make_input, rng)


# ------------------------------------------------------------------ objects

def _random_blob(rng: np.random.Generator, size: int, color: int) -> np.ndarray:
    cells = {(0, 0)}
    while len(cells) < size:
        y, x = list(cells)[int(rng.integers(len(cells)))]
        dy, dx = ((0, 1), (0, -1), (1, 0), (-1, 0))[int(rng.integers(4))]
        cells.add((y + dy, x + dx))
    ys = [y for y, _ in cells]
    xs = [x for _, x in cells]
    out = np.zeros((max(ys) - min(ys) + 1, max(xs) - min(xs) + 1), dtype=np.int8)
    for y, x in cells:
        out[y - min(ys), x - min(xs)] = color
    return out


def _mirror_symmetric_blob(rng: np.random.Generator, size: int, color: int) -> np.ndarray:
    half = _random_blob(rng, max(1, size // 2), color)
    return np.hstack([half, half[:, ::-1]])


def _place_boxes(
    rng: np.random.Generator,
    width: int,
    height: int,
    boxes: Sequence[np.ndarray],
    margin: int = 1,
) -> Optional[Grid]:
    """Drop each box at a random free position, keeping ``margin`` empty cells
    around every bounding box so the adjacency-based detectors see them apart.
    """
    canvas = np.zeros((height, width), dtype=np.int8)
    occupied = np.zeros((height, width), dtype=bool)
    for box in boxes:
        bh, bw = box.shape
        if bh > height or bw > width:
            return None
        placed = False
        for _ in range(60):
            y = int(rng.integers(0, height - bh + 1))
            x = int(rng.integers(0, width - bw + 1))
            y0, y1 = max(0, y - margin), min(height, y + bh + margin)
            x0, x1 = max(0, x - margin), min(width, x + bw + margin)
            if occupied[y0:y1, x0:x1].any():
                continue
            region = canvas[y : y + bh, x : x + bw]
            canvas[y : y + bh, x : x + bw] = np.where(box != 0, box, region)
            occupied[y0:y1, x0:x1] |= True
            placed = True
            break
        if not placed:
            return None
    return Grid(canvas)


_OBJECT_LAMBDAS = ("set_fg_color2", "set_fg_color4", "set_fg_color7", "hmirror", "vmirror", "rot180")


def in_place_tokens(detector: str, lam: str, post: Optional[str] = None) -> TokenSequence:
    levels = [
        [IDENTITY, detector, lam],
        [IDENTITY, "for_each"],
        ["apply_to_grid"],
    ]
    if post:
        levels.append([post])
    return levels_to_tokens(levels)


def crop_tile_tokens(detector: str, lam: Optional[str], compressor: str,
                     post: Optional[str] = None) -> TokenSequence:
    if lam is None:
        levels = [[detector], [compressor]]
    else:
        levels = [[detector, lam], ["for_each"], [compressor]]
    if post:
        levels.append([post])
    return levels_to_tokens(levels)


def gen_objects_v2(config: GeneratorConfig) -> GeneratedSample:
    if config.dsl_version < 2:
        raise InvalidConfig("gen_objects_v2 needs DSL version >= 2")
    rng = _rng(config, 53)
    detector = ("get_objects2", "get_objects3")[int(rng.integers(2))]
    post = _SAFE_POST[int(rng.integers(len(_SAFE_POST)))] if rng.random() < 0.3 else None
    if rng.random() < 0.5:
        lam = _OBJECT_LAMBDAS[int(rng.integers(len(_OBJECT_LAMBDAS)))]
        truth = in_place_tokens(detector, lam, post)
        crop = False
    else:
        lam = _OBJECT_LAMBDAS[int(rng.integers(len(_OBJECT_LAMBDAS)))] if rng.random() < 0.6 else None
        compressor = ("compress_objects_linear", "compress_objects_quad",
                      "compress_objects_quad_pad")[int(rng.integers(3))]
        truth = crop_tile_tokens(detector, lam, compressor, post)
        crop = True

    def make_input(r):
        n = int(r.integers(2, 5 if crop else 6))
        size = int(r.integers(10, 15))
        boxes = [
            _random_blob(r, int(r.integers(3, 7)), int(r.choice(config.palette)))
            for _ in range(n)
        ]
        placed = _place_boxes(r, size, size, boxes, margin=1)
        if placed is None:
            raise InvalidConfig("placement failed")
        return placed

    return _build_sample(config, "objects", truth, make_input, rng)


# ------------------------------------------------------------- v3 selectors

def keep_tokens(detector: str, metric: str, largest: bool, post: Optional[str] = None) -> TokenSequence:
    levels = [
        [detector, detector, metric],
        [IDENTITY, "for_each"],
        ["keep_largest" if largest else "keep_smallest"],
    ]
    if post:
        levels.append([post])
    return levels_to_tokens(levels)


def filter_tokens(detector: str, metric: str, largest: bool, post: Optional[str] = None) -> TokenSequence:
    levels = [
        [IDENTITY, detector, detector, metric],
        [IDENTITY, IDENTITY, "for_each"],
        [IDENTITY, "filter_largest" if largest else "filter_smallest"],
        ["apply_to_grid"],
    ]
    if post:
        levels.append([post])
    return levels_to_tokens(levels)


def keep_boolean_tokens(detector: str, predicate: str, negate: bool) -> TokenSequence:
    levels = [
        [detector, detector, predicate],
        [IDENTITY, "for_each"],
    ]
    if negate:
        levels.append([IDENTITY, "logical_not"])
    levels.append(["keep_boolean"])
    return levels_to_tokens(levels)


def filter_boolean_tokens(detector: str, predicate: str, negate: bool,
                          post: Optional[str] = None) -> TokenSequence:
    levels = [
        [IDENTITY, detector, detector, predicate],
        [IDENTITY, IDENTITY, "for_each"],
    ]
    if negate:
        levels.append([IDENTITY, IDENTITY, "logical_not"])
    levels.append([IDENTITY, "filter_boolean"])
    levels.append(["apply_to_grid"])
    if post:
        levels.append([post])
    return levels_to_tokens(levels)


def _distinct_size_boxes(rng, count, palette) -> list[np.ndarray]:
    sizes = rng.choice(np.arange(3, 3 + count * 2), size=count, replace=False)
    return [
        _random_blob(rng, int(s), int(rng.choice(palette))) for s in sizes
    ]


def gen_selector_v3(config: GeneratorConfig) -> GeneratedSample:
    if config.dsl_version < 3:
        raise InvalidConfig("gen_selector_v3 needs DSL version 3")
    rng = _rng(config, 67)
    mode = ("keep_size", "keep_sym", "filter_size", "filter_sym", "keep_subcount")[
        int(rng.integers(5))
    ]
    detector = ("get_objects2", "get_objects3")[int(rng.integers(2))]
    largest = bool(rng.integers(2))
    negate = bool(rng.integers(2))
    post = _SAFE_POST[int(rng.integers(len(_SAFE_POST)))] if rng.random() < 0.25 else None
    axis = ("is_h_symmetrical", "is_v_symmetrical")[int(rng.integers(2))]

    if mode == "keep_size":
        truth = keep_tokens(detector, "get_object_size", largest, post)
    elif mode == "filter_size":
        truth = filter_tokens(detector, "get_object_size", largest, post)
    elif mode == "keep_sym":
        truth = keep_boolean_tokens(detector, axis, negate)
    elif mode == "filter_sym":
        truth = filter_boolean_tokens(detector, axis, negate, post)
    else:
        truth = keep_tokens("get_objects1", "count", largest, post)

    def make_input(r):
        size = int(r.integers(11, 16))
        if mode == "keep_subcount":
            boxes = [
                _noisy_frame(r, int(r.integers(5, 8)), int(r.integers(5, 8)),
                             int(r.choice(config.palette)), config.palette, pixels=k)
                for k in r.permutation([0, 1, 2])[: int(r.integers(2, 4))]
            ]
        elif mode in ("keep_sym", "filter_sym"):
            boxes = []
            n_sym = 1 if mode == "keep_sym" else int(r.integers(1, 3))
            for i in range(3):
                color = int(r.choice(config.palette))
                if i < n_sym:
                    boxes.append(_mirror_symmetric_blob(r, int(r.integers(4, 8)), color))
                else:
                    for _ in range(20):
                        blob = _random_blob(r, int(r.integers(4, 8)), color)
                        if not np.array_equal(blob, blob[:, ::-1]) and not np.array_equal(
                            blob, blob[::-1, :]
                        ):
                            boxes.append(blob)
                            break
                    else:
                        boxes.append(np.array([[color, color, 0], [0, color, color]], dtype=np.int8))
            boxes = [boxes[i] for i in r.permutation(len(boxes))]
        else:
            boxes = _distinct_size_boxes(r, int(r.integers(2, 4)), config.palette)
        placed = _place_boxes(r, size, size, boxes, margin=1)
        if placed is None:
            raise InvalidConfig("placement failed")
        return placed

    return _build_sample(config, "selector", truth, make_input, rng)


# ------------------------------------------------------------- v3 windowing

def _noisy_frame(rng, fw: int, fh: int, color: int, palette, pixels: Optional[int] = None) -> np.ndarray:
    """A color-uniform rectangle outline with sparse interior content inset by
    one cell (inner pixels never touch the border, so frame components stay
    rectangular and sub-object counts are exactly 1 + pixel count)."""
    box = np.zeros((fh, fw), dtype=np.int8)
    box[0, :] = box[-1, :] = color
    box[:, 0] = box[:, -1] = color
    inner_palette = [c for c in palette if c != color]
    if fh > 4 and fw > 4:
        n = pixels if pixels is not None else int(rng.integers(1, 4))
        spots = [(y, x) for y in range(2, fh - 2) for x in range(2, fw - 2)]
        rng.shuffle(spots)
        chosen: list[tuple[int, int]] = []
        for y, x in spots:
            if len(chosen) == n:
                break
            if all(abs(y - cy) + abs(x - cx) > 1 for cy, cx in chosen):
                chosen.append((y, x))
                box[y, x] = int(rng.choice(inner_palette))
    return box


_WINDOW_LAMBDAS = ("remove_outline", "set_fg_color3", "set_fg_color6", "hmirror", "vmirror", "rot180")


def gen_windowing_v3(config: GeneratorConfig) -> GeneratedSample:
    if config.dsl_version < 3:
        raise InvalidConfig("gen_windowing_v3 needs DSL version 3")
    rng = _rng(config, 79)
    single = bool(rng.integers(2))
    lam = _WINDOW_LAMBDAS[int(rng.integers(len(_WINDOW_LAMBDAS)))]
    post = _SAFE_POST[int(rng.integers(len(_SAFE_POST)))] if rng.random() < 0.25 else None
    if single:
        truth = crop_tile_tokens("get_objects1", lam, "compress_objects_linear", post)
    else:
        lam_in_place = lam if lam != "remove_outline" else "set_fg_color3"
        truth = in_place_tokens("get_objects1", lam_in_place, post)

    def make_input(r):
        size = int(r.integers(12, 17))
        n = 1 if single else int(r.integers(2, 4))
        boxes = [
            _noisy_frame(r, int(r.integers(4, 8)), int(r.integers(4, 8)),
                         int(r.choice(config.palette)), config.palette)
            for _ in range(n)
        ]
        placed = _place_boxes(r, size, size, boxes, margin=1)
        if placed is None:
            raise InvalidConfig("placement failed")
        return placed

    return _build_sample(config, "windowing", truth, make_input, rng)


# ------------------------------------------------------------ v3 recombiner

def recombiner_tokens(axis: str, recolor: str, modify_first: bool,
                      post: Optional[str] = None) -> TokenSequence:
    halves = ("lefthalf", "righthalf") if axis == "h" else ("tophalf", "bottomhalf")
    concat = "hconcat" if axis == "h" else "vconcat"
    mid = [recolor, IDENTITY] if modify_first else [IDENTITY, recolor]
    levels = [list(halves), mid, [concat]]
    if post:
        levels.append([post])
    return levels_to_tokens(levels)


def gen_recombiner_v3(config: GeneratorConfig) -> GeneratedSample:
    """Objects straddle the grid midline; one half of the grid (hence of every
    object) is recolored and the halves are concatenated back together."""
    if config.dsl_version < 3:
        raise InvalidConfig("gen_recombiner_v3 needs DSL version 3")
    rng = _rng(config, 97)
    axis = ("h", "v")[int(rng.integers(2))]
    recolor = f"set_fg_color{int(rng.integers(1, 10))}"
    modify_first = bool(rng.integers(2))
    post = _SAFE_POST[int(rng.integers(len(_SAFE_POST)))] if rng.random() < 0.25 else None
    truth = recombiner_tokens(axis, recolor, modify_first, post)

    def make_input(r):
        w = int(r.integers(3, 8)) * 2
        h = int(r.integers(6, 13))
        if axis == "v":
            w, h = h, w
        canvas = np.zeros((h, w), dtype=np.int8)
        mid_x, mid_y = w // 2, h // 2
        for _ in range(int(r.integers(2, 4))):
            color = int(r.choice(config.palette))
            bw = int(r.integers(2, 5))
            bh = int(r.integers(2, 5))
            if axis == "h":
                x = mid_x - int(r.integers(1, bw))
                y = int(r.integers(0, h - bh + 1))
            else:
                x = int(r.integers(0, w - bw + 1))
                y = mid_y - int(r.integers(1, bh))
            x = min(max(x, 0), w - bw)
            y = min(max(y, 0), h - bh)
            canvas[y : y + bh, x : x + bw] = color
        return Grid(canvas)

    return _build_sample(config, "recombiner", truth, make_input, rng)


# ----------------------------------------------------------------- registry

GENERATORS: dict[str, Callable[[GeneratorConfig], GeneratedSample]] = {
    "trivial": gen_trivial,
    "split_merge": gen_split_merge,
    "tiling": gen_tiling,
    "objects": gen_objects_v2,
    "selector": gen_selector_v3,
    "windowing": gen_windowing_v3,
    "recombiner": gen_recombiner_v3,
}

_MIN_VERSION = {
    "trivial": 1,
    "split_merge": 1,
    "tiling": 1,
    "objects": 2,
    "selector": 3,
    "windowing": 3,
    "recombiner": 3,
}


def generate(generator_id: str, config: GeneratorConfig) -> GeneratedSample:
    if generator_id not in GENERATORS:
        raise InvalidConfig(f"unknown generator {generator_id!r}; choose from {sorted(GENERATORS)}")
    if config.dsl_version < _MIN_VERSION[generator_id]:
        raise InvalidConfig(
            f"generator {generator_id!r} needs DSL version >= {_MIN_VERSION[generator_id]}"
        )
    return GENERATORS[generator_id](config)


def generate_suite(
    generator_ids: Sequence[str],
    count: int,
    config: GeneratorConfig,
) -> list[GeneratedSample]:
    """Deterministic mixed suite: sample i uses generator i mod len(ids) with
    seed offset i."""
    out = []
    for i in range(count):
        gid = generator_ids[i % len(generator_ids)]
        out.append(generate(gid, replace(config, seed=config.seed + i)))
    return out


def structure_signature(tokens: TokenSequence) -> tuple[str, ...]:
    """Program structure with unary grid transforms wildcarded; used to check
    that out-of-distribution tasks stay outside a guidance coverage set."""
    unary = {s.name for s in dsl.unary_grid_primitives(3)}
    return tuple("*" if t in unary else t for t in truncate_at_eos(tokens)) + (EOS,)
