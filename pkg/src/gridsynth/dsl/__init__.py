"""Primitive catalog and typed application layer for the three DSL versions.

Version 1 holds 74 grid-to-grid primitives, version 2 adds 15 object-oriented
primitives (89 total), version 3 adds 9 selection/filtering primitives (98
total).  Registry order is fixed so token ids stay stable across runs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from ..errors import EvalError, ProgramTypeError
from ..grid import MAX_EVAL_SIDE, Grid
from . import _objects as ob
from . import _transforms as tr


class ValueKind(enum.Enum):
    GRID = "Grid"
    GRID_LIST = "GridList"
    INT = "Int"
    INT_LIST = "IntList"
    BOOL = "Bool"
    BOOL_LIST = "BoolList"
    FUNCTION = "FunctionRef"


@dataclass(frozen=True)
class PrimitiveSpec:
    name: str
    dsl_version: int
    param_kinds: tuple[ValueKind, ...]
    return_kind: ValueKind
    impl: Callable = field(compare=False, repr=False)
    needs_latent: bool = False


@dataclass(frozen=True)
class FunctionRef:
    """An unapplied unary primitive, as consumed by ``for_each``."""

    spec: PrimitiveSpec

    @property
    def name(self) -> str:
        return self.spec.name


Value = object  # Grid | list[Grid] | int | list[int] | bool | list[bool] | FunctionRef

_G = ValueKind.GRID
_GL = ValueKind.GRID_LIST
_I = ValueKind.INT
_IL = ValueKind.INT_LIST
_B = ValueKind.BOOL
_BL = ValueKind.BOOL_LIST
_F = ValueKind.FUNCTION


def _v1_entries():
    entries = []
    for k in range(1, 10):
        entries.append((f"set_fg_color{k}", (_G,), _G, tr.set_fg_color(k)))
    entries += [
        ("shift_left", (_G,), _G, tr.shift_left),
        ("shift_right", (_G,), _G, tr.shift_right),
        ("shift_up", (_G,), _G, tr.shift_up),
        ("shift_down", (_G,), _G, tr.shift_down),
        ("vmirror", (_G,), _G, tr.vmirror),
        ("hmirror", (_G,), _G, tr.hmirror),
        ("rot90", (_G,), _G, tr.rot90),
        ("rot180", (_G,), _G, tr.rot180),
        ("rot270", (_G,), _G, tr.rot270),
        ("tophalf", (_G,), _G, tr.tophalf),
        ("bottomhalf", (_G,), _G, tr.bottomhalf),
        ("lefthalf", (_G,), _G, tr.lefthalf),
        ("righthalf", (_G,), _G, tr.righthalf),
        ("symmetrize_left_around_vertical", (_G,), _G, tr.symmetrize_left_around_vertical),
        ("symmetrize_right_around_vertical", (_G,), _G, tr.symmetrize_right_around_vertical),
        ("symmetrize_top_around_horizontal", (_G,), _G, tr.symmetrize_top_around_horizontal),
        ("symmetrize_bottom_around_horizontal", (_G,), _G, tr.symmetrize_bottom_around_horizontal),
        ("upscale_horizontal_by_two", (_G,), _G, tr.upscale_horizontal_by_two),
        ("upscale_vertical_by_two", (_G,), _G, tr.upscale_vertical_by_two),
        ("upscale_by_two", (_G,), _G, tr.upscale_by_two),
        ("gravitate_right", (_G,), _G, tr.gravitate_right),
        ("gravitate_left", (_G,), _G, tr.gravitate_left),
        ("gravitate_up", (_G,), _G, tr.gravitate_up),
        ("gravitate_down", (_G,), _G, tr.gravitate_down),
        ("gravitate_left_right", (_G,), _G, tr.gravitate_left_right),
        ("gravitate_top_down", (_G,), _G, tr.gravitate_top_down),
        ("topthird", (_G,), _G, tr.topthird),
        ("vcenterthird", (_G,), _G, tr.vcenterthird),
        ("bottomthird", (_G,), _G, tr.bottomthird),
        ("leftthird", (_G,), _G, tr.leftthird),
        ("hcenterthird", (_G,), _G, tr.hcenterthird),
        ("rightthird", (_G,), _G, tr.rightthird),
        ("cellwiseOR", (_G, _G), _G, tr.cellwiseOR),
        ("cellwiseAND", (_G, _G), _G, tr.cellwiseAND),
        ("cellwiseXOR", (_G, _G), _G, tr.cellwiseXOR),
        ("cellwiseDifference", (_G, _G), _G, tr.cellwiseDifference),
        ("cellwiseNOR", (_G, _G), _G, tr.cellwiseNOR),
        ("vconcat", (_G, _G), _G, tr.vconcat),
        ("hconcat", (_G, _G), _G, tr.hconcat),
        ("color_change", (_G,), _G, tr.color_change),
        ("invert_colors", (_G,), _G, tr.invert_colors),
        ("first_quadrant", (_G,), _G, tr.first_quadrant),
        ("second_quadrant", (_G,), _G, tr.second_quadrant),
        ("third_quadrant", (_G,), _G, tr.third_quadrant),
        ("fourth_quadrant", (_G,), _G, tr.fourth_quadrant),
        ("hfirstfourth", (_G,), _G, tr.hfirstfourth),
        ("hsecondfourth", (_G,), _G, tr.hsecondfourth),
        ("hthirdfourth", (_G,), _G, tr.hthirdfourth),
        ("hlastfourth", (_G,), _G, tr.hlastfourth),
        ("vfirstfourth", (_G,), _G, tr.vfirstfourth),
        ("vsecondfourth", (_G,), _G, tr.vsecondfourth),
        ("vthirdfourth", (_G,), _G, tr.vthirdfourth),
        ("vlastfourth", (_G,), _G, tr.vlastfourth),
        ("duplicate_top_row", (_G,), _G, tr.duplicate_top_row),
        ("duplicate_bottom_row", (_G,), _G, tr.duplicate_bottom_row),
        ("duplicate_left_column", (_G,), _G, tr.duplicate_left_column),
        ("duplicate_right_column", (_G,), _G, tr.duplicate_right_column),
        ("remove_outline", (_G,), _G, tr.remove_outline),
        ("shear_grid_left", (_G,), _G, tr.shear_grid_left),
        ("shear_grid_right", (_G,), _G, tr.shear_grid_right),
        ("shear_grid_zigzag", (_G,), _G, tr.shear_grid_zigzag),
        ("insert_outline", (_G,), _G, tr.insert_outline),
        ("get_major_pixel", (_G,), _G, tr.get_major_pixel),
        ("get_minor_pixel", (_G,), _G, tr.get_minor_pixel),
        ("upscale_by_three", (_G,), _G, tr.upscale_by_three),
    ]
    return entries


_V2_ENTRIES = [
    ("get_objects1", (_G,), _GL, ob.get_objects1),
    ("get_objects2", (_G,), _GL, ob.get_objects2),
    ("get_objects3", (_G,), _GL, ob.get_objects3),
    ("get_objects4", (_G,), _GL, ob.get_objects4),
    ("get_objects5", (_G,), _GL, ob.get_objects5),
    ("get_objects6", (_G,), _GL, ob.get_objects6),
    ("compress_objects_linear", (_GL,), _G, ob.compress_objects_linear),
    ("compress_objects_quad", (_GL,), _G, ob.compress_objects_quad),
    ("compress_objects_quad_pad", (_GL,), _G, ob.compress_objects_quad_pad),
    ("for_each", (_GL, _F), _GL, None),
    ("apply_to_grid", (_G, _GL), _G, ob.apply_to_grid),
    ("cellwise_OR_list", (_GL,), _G, ob.cellwise_OR_list),
    ("get_pixels", (_G,), _IL, ob.get_pixels),
    ("get_object_size", (_G,), _I, ob.get_object_size),
    ("count", (_GL,), _I, None),
]

_V3_ENTRIES = [
    ("filter_largest", (_GL, _IL), _GL, ob.filter_largest),
    ("filter_smallest", (_GL, _IL), _GL, ob.filter_smallest),
    ("keep_largest", (_GL, _IL), _G, ob.keep_largest),
    ("keep_smallest", (_GL, _IL), _G, ob.keep_smallest),
    ("is_h_symmetrical", (_G,), _B, ob.is_h_symmetrical),
    ("is_v_symmetrical", (_G,), _B, ob.is_v_symmetrical),
    ("logical_not", (_B,), _B, ob.logical_not),
    ("keep_boolean", (_GL, _BL), _G, ob.keep_boolean),
    ("filter_boolean", (_GL, _BL), _GL, ob.filter_boolean),
]

_REGISTRY_CACHE: dict[int, tuple[PrimitiveSpec, ...]] = {}


def registry(version: int) -> list[PrimitiveSpec]:
    """All primitives of the given DSL version, in fixed catalog order."""
    if version not in (1, 2, 3):
        raise ValueError(f"unknown DSL version {version}")
    if version not in _REGISTRY_CACHE:
        entries = list(_v1_entries())
        if version >= 2:
            entries += _V2_ENTRIES
        if version >= 3:
            entries += _V3_ENTRIES
        specs = tuple(
            PrimitiveSpec(
                name=name,
                dsl_version=1 if i < 74 else (2 if i < 89 else 3),
                param_kinds=params,
                return_kind=ret,
                impl=impl,
                needs_latent=(name == "color_change"),
            )
            for i, (name, params, ret, impl) in enumerate(entries)
        )
        _REGISTRY_CACHE[version] = specs
    return list(_REGISTRY_CACHE[version])


def by_name(version: int) -> dict[str, PrimitiveSpec]:
    return {spec.name: spec for spec in registry(version)}


def unary_grid_primitives(version: int) -> list[PrimitiveSpec]:
    """Primitives with signature Grid -> Grid (the LGS move set, trivial tasks)."""
    return [
        s
        for s in registry(version)
        if s.param_kinds == (_G,) and s.return_kind is _G
    ]


def lambda_eligible(spec: PrimitiveSpec) -> bool:
    """Whether the primitive may fill a FunctionRef slot of ``for_each``."""
    if spec.name == "count":
        return True
    return spec.param_kinds == (_G,) and spec.return_kind in (_G, _I, _B)


def kind_of(value: Value) -> ValueKind:
    if isinstance(value, Grid):
        return _G
    if isinstance(value, FunctionRef):
        return _F
    if isinstance(value, bool):
        return _B
    if isinstance(value, (int,)):
        return _I
    if isinstance(value, list):
        if not value:
            return _GL
        first = value[0]
        if isinstance(first, Grid):
            return _GL
        if isinstance(first, bool):
            return _BL
        if isinstance(first, int):
            return _IL
    raise ProgramTypeError(f"value of unsupported type {type(value).__name__}")


def accepts(spec: PrimitiveSpec, position: int, kind: ValueKind) -> bool:
    """Kind compatibility for one parameter slot, honoring the documented
    overloads: ``count`` takes any list (or a Grid when mapped as a lambda,
    counting its sub-objects) and ``logical_not`` maps elementwise over
    boolean lists."""
    if spec.name == "count":
        return kind in (_GL, _IL, _BL, _G)
    if spec.name == "logical_not":
        return kind in (_B, _BL)
    declared = spec.param_kinds[position]
    if declared is _GL and kind is _GL:
        return True
    return declared is kind


def result_kind(spec: PrimitiveSpec, arg_kinds: Sequence[ValueKind]) -> ValueKind:
    if spec.name == "for_each":
        raise ValueError("for_each result kind depends on its lambda; use for_each_result_kind")
    if spec.name == "logical_not":
        return arg_kinds[0]
    return spec.return_kind


_LIST_OF = {_G: _GL, _I: _IL, _B: _BL}


def for_each_result_kind(lam: PrimitiveSpec) -> ValueKind:
    elem = _I if lam.name == "count" else lam.return_kind
    if elem not in _LIST_OF:
        raise ProgramTypeError(f"for_each lambda {lam.name} must yield Grid, Int, or Bool values")
    return _LIST_OF[elem]


def resolve_color_change(g: Optional[Grid] = None, support=None) -> list[tuple[int, int]]:
    """All (from, to) color bindings the evaluator will try for color_change."""
    return [(a, b) for a in range(10) for b in range(10) if a != b]


def _check_result_size(value: Value) -> Value:
    grids = value if isinstance(value, list) else [value]
    for item in grids:
        if isinstance(item, Grid) and max(item.width, item.height) > MAX_EVAL_SIDE:
            raise EvalError(
                f"grid {item.width}x{item.height} exceeds the {MAX_EVAL_SIDE} evaluation cap"
            )
    return value


def apply_primitive(
    spec: PrimitiveSpec,
    args: Sequence[Value],
    latent: Optional[tuple[int, int]] = None,
) -> Value:
    """Apply one primitive to runtime values.  Pure and deterministic.

    Kind mismatches raise ProgramTypeError; shape/content violations raise
    EvalError.  ``color_change`` requires a latent (from, to) binding.
    """
    if len(args) != len(spec.param_kinds):
        raise ProgramTypeError(
            f"{spec.name} expects {len(spec.param_kinds)} arguments, got {len(args)}"
        )
    for i, arg in enumerate(args):
        if isinstance(arg, list) and not arg:
            # An empty list is kind-ambiguous; any list parameter takes it.
            if spec.name == "count" or spec.param_kinds[i] in (_GL, _IL, _BL):
                continue
        if not accepts(spec, i, kind_of(arg)):
            raise ProgramTypeError(
                f"{spec.name} argument {i} has kind {kind_of(arg).value}, "
                f"expected {spec.param_kinds[i].value}"
            )

    if spec.name == "for_each":
        objs, ref = args
        if not lambda_eligible(ref.spec):
            raise ProgramTypeError(f"{ref.name} is not usable as a for_each lambda")
        return _check_result_size([apply_primitive(ref.spec, [g], latent) for g in objs])

    if spec.name == "count":
        arg = args[0]
        if isinstance(arg, Grid):
            return ob.count_subobjects(arg)
        return len(arg)

    if spec.needs_latent:
        if latent is None:
            raise EvalError(f"{spec.name} requires a latent color binding")
        return _check_result_size(spec.impl(args[0], latent[0], latent[1]))

    return _check_result_size(spec.impl(*args))
