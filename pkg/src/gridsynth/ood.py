"""Out-of-distribution task suite with structure-restricted guidance.

Ten desk-scale tasks whose ground-truth program structure is deliberately
absent from the guidance coverage attached to each task: transform chains
deeper than the covered one/two-step tasks, an uncovered tiling arity, and
cross-category compositions (object selection + tiling, filtering + rotation,
cropping + split-merge).  Flat probability-space search stays confined to the
covered structures and fails; re-launching the search on intermediate
execution results composes the solution for most tasks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import product
from typing import Optional

import numpy as np

from . import dsl
from .grid import Grid, random_cells
from .guidance import RestrictedSetGuidance
from .program import EOS, IDENTITY, NEW_LEVEL, TokenSequence, evaluate, parse
from .taskgen import (
    GeneratedSample,
    GeneratorConfig,
    _build_sample,
    _distinct_size_boxes,
    _noisy_frame,
    _place_boxes,
    _random_blob,
    curated_two_chains,
    filter_tokens,
    keep_tokens,
    levels_to_tokens,
    single_primitive_names,
    split_merge_tokens,
    structure_signature,
    tiling_tokens,
)

OOD_DSL_VERSION = 3


@dataclass
class OodTask:
    name: str
    sample: GeneratedSample
    groups: list[tuple[tuple[TokenSequence, ...], float]]
    restriction: str

    @property
    def coverage(self) -> list[TokenSequence]:
        return [p for seqs, _ in self.groups for p in seqs]

    def guidance(self, power: float = 8.0) -> RestrictedSetGuidance:
        return RestrictedSetGuidance.from_groups(
            self.groups, version=OOD_DSL_VERSION, power=power
        )


# ----------------------------------------------------------- coverage sets

@lru_cache(maxsize=None)
def chain_coverage() -> tuple[TokenSequence, ...]:
    """Everything the trivial-task generator trains on: single unary
    primitives and the curated two-step compositions."""
    singles = [n for n in single_primitive_names(1) if n != "color_change"]
    out = [(name, EOS) for name in singles]
    out += [(p, NEW_LEVEL, q, EOS) for p, q in curated_two_chains(1)]
    return tuple(out)


_COVER_TILE_TRANSFORMS = (IDENTITY, "hmirror", "vmirror", "rot180")


@lru_cache(maxsize=None)
def tiling_coverage() -> tuple[TokenSequence, ...]:
    out = []
    for template, n in (("grid2x2", 4), ("h2", 2), ("h3", 3), ("h4", 4),
                        ("v2", 2), ("v3", 3), ("v4", 4)):
        for tfs in product(_COVER_TILE_TRANSFORMS, repeat=n):
            out.append(tiling_tokens(template, tfs))
    rng = np.random.default_rng(31337)
    for _ in range(128):
        tfs = [
            _COVER_TILE_TRANSFORMS[int(rng.integers(len(_COVER_TILE_TRANSFORMS)))]
            for _ in range(9)
        ]
        out.append(tiling_tokens("grid3x3", tfs))
    return tuple(out)


_DETECTORS = ("get_objects1", "get_objects2", "get_objects3", "get_objects6")
_METRICS = ("get_object_size", "count")


@lru_cache(maxsize=None)
def keep_coverage(with_posts: bool = True) -> tuple[TokenSequence, ...]:
    """Object-selection training structures: crop one object, at most one
    post-processing transform."""
    posts: list[Optional[str]] = [None]
    if with_posts:
        posts += [n for n in single_primitive_names(1) if n != "color_change"]
    out = []
    for detector in _DETECTORS:
        for metric in _METRICS:
            for largest in (True, False):
                for post in posts:
                    out.append(keep_tokens(detector, metric, largest, post))
    return tuple(out)


@lru_cache(maxsize=None)
def filter_coverage() -> tuple[TokenSequence, ...]:
    """Object-filtering structures; the training data never post-rotates them."""
    out = []
    for detector in _DETECTORS:
        for metric in _METRICS:
            for largest in (True, False):
                out.append(filter_tokens(detector, metric, largest, None))
    return tuple(out)


@lru_cache(maxsize=None)
def split_merge_coverage() -> tuple[TokenSequence, ...]:
    splits = (("h", 2), ("h", 3), ("h", 4), ("v", 2), ("v", 3), ("v", 4), ("quad", 4))
    ops = ("cellwiseOR", "cellwiseXOR", "cellwiseAND", "cellwiseNOR", "cellwiseDifference")
    return tuple(split_merge_tokens(split, op) for split in splits for op in ops)


# ------------------------------------------------------------ input makers

def _varied_colors_input(config, r, lo=3, hi=7):
    """Random grid with at least two foreground colors of distinct counts, so
    color inversion is a real change."""
    for _ in range(50):
        w = int(r.integers(lo, hi + 1))
        h = int(r.integers(lo, hi + 1))
        g = Grid(random_cells(r, w, h, 0.6, config.palette[:4]))
        counts = np.bincount(g.cells[g.cells != 0], minlength=10)
        present = np.nonzero(counts)[0]
        if len(present) >= 2 and counts[present].max() != counts[present].min():
            return g
    return g


def _plain_input(config, r, lo=3, hi=7):
    w = int(r.integers(lo, hi + 1))
    h = int(r.integers(lo, hi + 1))
    return Grid(random_cells(r, w, h, config.density, config.palette))


def _filled_rect(r, w, h, color) -> np.ndarray:
    return np.full((h, w), color, dtype=np.int8)


# -------------------------------------------------------------- task suite

def gen_ood_suite(seed: int = 0) -> list[OodTask]:
    """The ten-task suite; each entry carries its own restricted coverage."""
    chains = chain_coverage()
    tilings = tiling_coverage()
    keeps = keep_coverage()
    filters = filter_coverage()
    merges = split_merge_coverage()

    tasks: list[OodTask] = []

    def build(name, truth, make_input, groups, restriction, salt, version=OOD_DSL_VERSION):
        config = GeneratorConfig(seed=seed + salt, dsl_version=version, n_support=3, n_query=1)
        rng = np.random.default_rng((seed, salt, 101))
        sample = _build_sample(config, f"ood_{name}", truth, make_input, rng)
        tasks.append(OodTask(name, sample, list(groups), restriction))

    # 1. Tile 2x2, then invert colors; tiling tasks are never post-processed.
    build(
        "tile2x2_invert",
        levels_to_tokens([[IDENTITY] * 4, ["hconcat", "hconcat"], ["vconcat"], ["invert_colors"]]),
        lambda r, c=GeneratorConfig(seed=seed): _varied_colors_input(c, r, 3, 6),
        [(tilings, 0.8), (chains, 0.2)],
        "tiling coverage has no post-transform level",
        salt=1,
    )

    # 2-4. Transform chains deeper than the covered two steps.
    build(
        "chain3_gravitate",
        ("gravitate_left", NEW_LEVEL, "gravitate_up", NEW_LEVEL, "set_fg_color8", EOS),
        lambda r, c=GeneratorConfig(seed=seed): _plain_input(c, r, 4, 8),
        [(chains, 1.0)],
        "chain coverage stops at two primitives",
        salt=2,
    )
    build(
        "chain3_rot_upscale",
        ("rot90", NEW_LEVEL, "upscale_horizontal_by_two", NEW_LEVEL, "upscale_vertical_by_two", EOS),
        lambda r, c=GeneratorConfig(seed=seed): _plain_input(c, r, 3, 6),
        [(chains, 1.0)],
        "chain coverage stops at two primitives",
        salt=3,
    )
    build(
        "chain4_rot_upscale_recolor",
        ("rot90", NEW_LEVEL, "upscale_horizontal_by_two", NEW_LEVEL,
         "upscale_vertical_by_two", NEW_LEVEL, "set_fg_color5", EOS),
        lambda r, c=GeneratorConfig(seed=seed): _plain_input(c, r, 3, 6),
        [(chains, 1.0)],
        "chain coverage stops at two primitives",
        salt=4,
    )

    # 5. Another three-step chain mixing color and geometry.
    build(
        "chain3_invert_rotate",
        ("invert_colors", NEW_LEVEL, "rot180", NEW_LEVEL, "gravitate_down", EOS),
        lambda r, c=GeneratorConfig(seed=seed): _varied_colors_input(c, r, 4, 8),
        [(chains, 1.0)],
        "chain coverage stops at two primitives",
        salt=5,
    )

    # 6. 2x4 tiling; covered tilings are 2x2, 3x3, and 1xN/Nx1 strips.
    build(
        "tile2x4_alternating",
        tiling_tokens("grid2x4", ["rot180", IDENTITY, "rot180", IDENTITY,
                                  IDENTITY, "rot180", IDENTITY, "rot180"]),
        lambda r, c=GeneratorConfig(seed=seed): _plain_input(c, r, 3, 6),
        [(tilings, 0.8), (chains, 0.2)],
        "no 2x4 tiling template in coverage",
        salt=6,
    )

    # 7. Crop the smallest object, then concatenate it with itself; object
    # selection and tiling are never combined in coverage.
    def smallest_self_input(r):
        boxes = []
        for size in (4, 6, 8):
            # At least two distinct columns, so self-concatenation differs
            # from every covered single-step widening.
            for _ in range(30):
                blob = _random_blob(r, size, int(r.choice((1, 2, 3, 4, 6, 7))))
                if blob.shape[1] >= 2 and not np.array_equal(blob[:, :1], blob[:, 1:2]):
                    boxes.append(blob)
                    break
            else:
                raise ValueError("blob generation failed")
        placed = _place_boxes(r, 13, 13, boxes, margin=1)
        if placed is None:
            raise ValueError("placement failed")
        return placed

    build(
        "crop_smallest_self_tile",
        levels_to_tokens(
            [
                ["get_objects2", "get_objects2", "get_object_size",
                 "get_objects2", "get_objects2", "get_object_size"],
                [IDENTITY, "for_each", IDENTITY, "for_each"],
                ["keep_smallest", "keep_smallest"],
                ["hconcat"],
            ]
        ),
        smallest_self_input,
        [(keeps, 0.9), (chains, 0.1)],
        "selection and tiling never combined; bare concatenation not covered",
        salt=7,
    )

    # 8. Crop the frame with the most sub-objects, rotate it, then recolor;
    # cropping tasks carry at most one post-transform in coverage.  Frames are
    # non-square so only the correctly rotated intermediate matches the
    # target orientation.
    def frames_input(r):
        ks = r.permutation([0, 1, 2, 3])[:3]
        boxes = []
        for k in ks:
            fw = int(r.integers(5, 8))
            fh = fw + (1 if bool(r.integers(2)) else -1)
            boxes.append(
                _noisy_frame(r, fw, max(4, fh), int(r.choice((1, 2, 3, 4, 6))),
                             (1, 2, 3, 4, 6, 7, 8), pixels=int(k))
            )
        placed = _place_boxes(r, 15, 15, boxes, margin=1)
        if placed is None:
            raise ValueError("placement failed")
        return placed

    build(
        "crop_busiest_frame_rot_recolor",
        levels_to_tokens(
            [
                ["get_objects1", "get_objects1", "count"],
                [IDENTITY, "for_each"],
                ["keep_largest"],
                ["rot90"],
                ["set_fg_color3"],
            ]
        ),
        frames_input,
        [(keeps, 0.9), (chains, 0.1)],
        "cropping coverage applies at most one post-transform",
        salt=8,
    )

    # 9. Filter out the largest object, then rotate the whole grid; coverage
    # never rotates a filtering task's output.
    def filter_input(r):
        boxes = _distinct_size_boxes(r, 3, (1, 2, 3, 4, 6, 7))
        side = int(r.integers(11, 14))
        placed = _place_boxes(r, side, side, boxes, margin=1)
        if placed is None:
            raise ValueError("placement failed")
        return placed

    build(
        "filter_largest_rot270",
        levels_to_tokens(
            [
                [IDENTITY, "get_objects2", "get_objects2", "get_object_size"],
                [IDENTITY, IDENTITY, "for_each"],
                [IDENTITY, "filter_largest"],
                ["apply_to_grid"],
                ["rot270"],
            ]
        ),
        filter_input,
        [(filters, 0.9), (chains, 0.1)],
        "filtering coverage is never rotated afterwards",
        salt=9,
    )

    # 10. Crop the largest rectangle, split it in half, merge with OR;
    # cropping and split-merge are never combined in coverage.  The truth is
    # the duplicated-subtree form the token syntax forces.
    def rects_input(r):
        boxes = [
            _filled_rect(r, 2, 2, int(r.choice((1, 2, 3)))),
            _filled_rect(r, 3, 2, int(r.choice((4, 6)))),
            _noisy_frame(r, 5, 5, int(r.choice((7, 8))), (1, 2, 3, 4, 6)),
        ]
        placed = _place_boxes(r, 14, 14, boxes, margin=1)
        if placed is None:
            raise ValueError("placement failed")
        return placed

    build(
        "crop_largest_split_or",
        levels_to_tokens(
            [
                ["get_objects1", "get_objects1", "get_object_size",
                 "get_objects1", "get_objects1", "get_object_size"],
                [IDENTITY, "for_each", IDENTITY, "for_each"],
                ["keep_largest", "keep_largest"],
                ["lefthalf", "righthalf"],
                ["cellwiseOR"],
            ]
        ),
        rects_input,
        [(keeps, 0.45), (merges, 0.45), (chains, 0.1)],
        "cropping and split-merge never combined in coverage",
        salt=10,
    )

    return tasks


def coverage_is_disjoint(task: OodTask) -> bool:
    """Mechanical out-of-distribution check: the truth structure signature
    never appears among the covered structures."""
    truth_sig = structure_signature(task.sample.truth)
    return all(structure_signature(p) != truth_sig for p in task.coverage)
