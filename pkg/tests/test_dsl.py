"""Golden behavior for every primitive in the catalog, plus algebraic laws."""

import numpy as np
import pytest

from gridsynth import dsl
from gridsynth.dsl import FunctionRef, ValueKind, apply_primitive, by_name, registry
from gridsynth.errors import EvalError, ProgramTypeError
from gridsynth.grid import Grid, grid_from_rows, grid_to_rows, random_grid

B3 = by_name(3)


def run(name, *row_args, latent=None):
    args = [grid_from_rows(rows) for rows in row_args]
    return apply_primitive(B3[name], args, latent=latent)


def rows(result):
    return grid_to_rows(result)


def test_registry_sizes():
    assert len(registry(1)) == 74
    assert len(registry(2)) == 89
    assert len(registry(3)) == 98


def test_registry_cumulative_and_stable():
    names1 = [s.name for s in registry(1)]
    names2 = [s.name for s in registry(2)]
    names3 = [s.name for s in registry(3)]
    assert names2[:74] == names1
    assert names3[:89] == names2
    assert len(set(names3)) == 98


def test_versions_tagged():
    assert all(s.dsl_version == 1 for s in registry(1))
    assert {s.dsl_version for s in registry(3)} == {1, 2, 3}


# ----------------------------------------------------- single-grid goldens

GOLDEN_UNARY = {
    "shift_left": ([[0, 1, 2]], [[1, 2, 0]]),
    "shift_right": ([[1, 2, 0]], [[0, 1, 2]]),
    "shift_up": ([[0, 0], [1, 2]], [[1, 2], [0, 0]]),
    "shift_down": ([[1, 2], [0, 0]], [[0, 0], [1, 2]]),
    "vmirror": ([[1, 2], [0, 3]], [[0, 3], [1, 2]]),
    "hmirror": ([[1, 2], [0, 3]], [[2, 1], [3, 0]]),
    "rot90": ([[1, 2], [0, 3]], [[0, 1], [3, 2]]),
    "rot180": ([[1, 2], [3, 4]], [[4, 3], [2, 1]]),
    "rot270": ([[1, 2], [0, 3]], [[2, 3], [1, 0]]),
    "tophalf": ([[1, 2], [3, 4], [5, 6]], [[1, 2]]),
    "bottomhalf": ([[1, 2], [3, 4], [5, 6]], [[5, 6]]),
    "lefthalf": ([[1, 2, 3], [4, 5, 6]], [[1], [4]]),
    "righthalf": ([[1, 2, 3], [4, 5, 6]], [[3], [6]]),
    "symmetrize_left_around_vertical": ([[1, 2, 0, 0], [3, 0, 0, 0]], [[1, 2, 2, 1], [3, 0, 0, 3]]),
    "symmetrize_right_around_vertical": ([[0, 0, 2, 1], [0, 0, 0, 3]], [[1, 2, 2, 1], [3, 0, 0, 3]]),
    "symmetrize_top_around_horizontal": ([[1, 2], [3, 4]], [[1, 2], [1, 2]]),
    "symmetrize_bottom_around_horizontal": ([[1, 2], [3, 4]], [[3, 4], [3, 4]]),
    "upscale_horizontal_by_two": ([[1, 2]], [[1, 1, 2, 2]]),
    "upscale_vertical_by_two": ([[1], [2]], [[1], [1], [2], [2]]),
    "upscale_by_two": ([[1, 2]], [[1, 1, 2, 2], [1, 1, 2, 2]]),
    "upscale_by_three": ([[1]], [[1, 1, 1], [1, 1, 1], [1, 1, 1]]),
    "gravitate_right": ([[1, 0, 2, 0]], [[0, 0, 1, 2]]),
    "gravitate_left": ([[0, 3, 0, 5]], [[3, 5, 0, 0]]),
    "gravitate_up": ([[0, 1], [0, 0], [2, 0]], [[2, 1], [0, 0], [0, 0]]),
    "gravitate_down": ([[2, 1], [0, 0], [0, 1]], [[0, 0], [0, 1], [2, 1]]),
    "gravitate_left_right": ([[1, 0, 0, 2, 0, 3]], [[1, 0, 0, 0, 2, 3]]),
    "gravitate_top_down": ([[0, 0], [1, 0], [0, 2], [0, 0]], [[1, 0], [0, 0], [0, 0], [0, 2]]),
    "topthird": ([[1], [2], [3]], [[1]]),
    "hcenterthird": ([[1], [2], [3]], [[2]]),
    "bottomthird": ([[1], [2], [3]], [[3]]),
    "leftthird": ([[1, 2, 3]], [[1]]),
    "vcenterthird": ([[1, 2, 3]], [[2]]),
    "rightthird": ([[1, 2, 3]], [[3]]),
    "invert_colors": ([[1, 1], [2, 0]], [[2, 2], [1, 0]]),
    "first_quadrant": ([[1, 2], [3, 4]], [[1]]),
    "second_quadrant": ([[1, 2], [3, 4]], [[2]]),
    "third_quadrant": ([[1, 2], [3, 4]], [[3]]),
    "fourth_quadrant": ([[1, 2], [3, 4]], [[4]]),
    "hfirstfourth": ([[1, 2, 3, 4]], [[1]]),
    "hsecondfourth": ([[1, 2, 3, 4]], [[2]]),
    "hthirdfourth": ([[1, 2, 3, 4]], [[3]]),
    "hlastfourth": ([[1, 2, 3, 4]], [[4]]),
    "vfirstfourth": ([[1], [2], [3], [4]], [[1]]),
    "vsecondfourth": ([[1], [2], [3], [4]], [[2]]),
    "vthirdfourth": ([[1], [2], [3], [4]], [[3]]),
    "vlastfourth": ([[1], [2], [3], [4]], [[4]]),
    "duplicate_top_row": ([[1, 2], [3, 4]], [[1, 2], [1, 2], [3, 4]]),
    "duplicate_bottom_row": ([[1, 2], [3, 4]], [[1, 2], [3, 4], [3, 4]]),
    "duplicate_left_column": ([[1, 2]], [[1, 1, 2]]),
    "duplicate_right_column": ([[1, 2]], [[1, 2, 2]]),
    "remove_outline": ([[1, 1, 1], [1, 5, 1], [1, 1, 1]], [[5]]),
    "insert_outline": ([[5]], [[0, 0, 0], [0, 5, 0], [0, 0, 0]]),
    "shear_grid_left": ([[0, 1, 2], [3, 4, 5], [6, 7, 8]], [[2, 0, 0], [4, 5, 0], [6, 7, 8]]),
    "shear_grid_right": ([[1, 0, 0], [3, 4, 0], [6, 7, 8]], [[0, 0, 1], [0, 3, 4], [6, 7, 8]]),
    "shear_grid_zigzag": ([[1, 2, 3], [4, 5, 6], [7, 8, 9]], [[0, 1, 2], [4, 5, 6], [8, 9, 0]]),
    "get_major_pixel": ([[1, 1, 2], [0, 2, 2]], [[2]]),
    "get_minor_pixel": ([[1, 1, 2], [0, 2, 2]], [[1]]),
}

GOLDEN_BINARY = {
    "cellwiseOR": ([[1, 0], [0, 0]], [[2, 0], [0, 2]], [[1, 0], [0, 2]]),
    "cellwiseAND": ([[1, 2], [0, 3]], [[5, 0], [0, 5]], [[1, 0], [0, 3]]),
    "cellwiseXOR": ([[1, 0], [2, 0]], [[0, 3], [2, 0]], [[1, 3], [0, 0]]),
    "cellwiseDifference": ([[1, 2], [3, 0]], [[0, 2], [0, 0]], [[1, 0], [3, 0]]),
    "cellwiseNOR": ([[1, 0], [0, 0]], [[0, 0], [2, 0]], [[0, 1], [0, 1]]),
    "vconcat": ([[1]], [[2]], [[1], [2]]),
    "hconcat": ([[1]], [[2]], [[1, 2]]),
}


@pytest.mark.parametrize("name", sorted(GOLDEN_UNARY))
def test_unary_golden(name):
    grid_in, expected = GOLDEN_UNARY[name]
    assert rows(run(name, grid_in)) == expected


@pytest.mark.parametrize("k", range(1, 10))
def test_set_fg_color_golden(k):
    assert rows(run(f"set_fg_color{k}", [[2, 0], [0, 3]])) == [[k, 0], [0, k]]


@pytest.mark.parametrize("name", sorted(GOLDEN_BINARY))
def test_binary_golden(name):
    a, b, expected = GOLDEN_BINARY[name]
    assert rows(run(name, a, b)) == expected


def test_color_change_golden():
    assert rows(run("color_change", [[3, 0], [3, 1]], latent=(3, 7))) == [[7, 0], [7, 1]]
    # no pixel of the source color: identity
    assert rows(run("color_change", [[1, 2]], latent=(5, 9))) == [[1, 2]]


def test_color_change_requires_binding():
    with pytest.raises(EvalError):
        run("color_change", [[1]])


def test_major_minor_tie_breaks():
    assert rows(run("get_major_pixel", [[1, 2], [0, 0]])) == [[1]]
    assert rows(run("get_minor_pixel", [[1, 2], [0, 0]])) == [[1]]
    assert rows(run("get_major_pixel", [[0, 0]])) == [[0]]


def test_cellwise_shape_mismatch_errors():
    with pytest.raises(EvalError):
        run("cellwiseOR", [[1]], [[1, 2]])
    with pytest.raises(EvalError):
        run("hconcat", [[1]], [[1], [2]])
    with pytest.raises(EvalError):
        run("vconcat", [[1]], [[1, 2]])


def test_halves_need_two_lines():
    with pytest.raises(EvalError):
        run("tophalf", [[1, 2]])
    with pytest.raises(EvalError):
        run("lefthalf", [[1], [2]])


# ----------------------------------------------------------- object goldens

def test_get_objects1_frame_with_content():
    grid = [[0, 0, 0, 0, 0],
            [0, 2, 2, 2, 0],
            [0, 2, 5, 2, 0],
            [0, 2, 2, 2, 0],
            [0, 0, 0, 0, 0]]
    objs = run("get_objects1", grid)
    assert len(objs) == 1
    assert grid_to_rows(objs[0]) == [[2, 2, 2], [2, 5, 2], [2, 2, 2]]
    assert objs[0].origin == (1, 1)


def test_get_objects1_ignores_blobs():
    assert run("get_objects1", [[1, 1, 0], [1, 0, 0]]) == []


def test_get_objects2_singletons():
    objs = run("get_objects2", [[1, 0, 2]])
    assert [(o.origin, grid_to_rows(o)) for o in objs] == [((0, 0), [[1]]), ((2, 0), [[2]])]


def test_get_objects2_connectivity():
    objs = run("get_objects2", [[1, 1], [1, 0]])
    assert len(objs) == 1 and len(objs[0].pixels) == 3


def test_diagonal_four_vs_eight_way():
    grid = [[1, 0], [0, 1]]
    assert len(run("get_objects2", grid)) == 2
    assert len(run("get_objects3", grid)) == 1


def test_get_objects4_uniform_color_on_background():
    objs = run("get_objects4", [[3, 3, 3], [3, 1, 3], [3, 3, 3]])
    assert len(objs) == 1
    assert grid_to_rows(objs[0]) == [[1]] and objs[0].origin == (1, 1)


def test_get_objects5_eight_way_uniform():
    grid = [[1, 3], [3, 1]]
    assert len(run("get_objects4", grid)) == 2
    assert len(run("get_objects5", grid)) == 1


def test_get_objects6_grid_clusters():
    grid = [[1, 0, 2], [0, 0, 0], [3, 0, 4]]
    objs = run("get_objects6", grid)
    assert [grid_to_rows(o) for o in objs] == [[[1]], [[2]], [[3]], [[4]]]
    assert [o.origin for o in objs] == [(0, 0), (2, 0), (0, 2), (2, 2)]


def test_get_objects_empty_grid():
    for k in range(1, 7):
        assert run(f"get_objects{k}", [[0, 0], [0, 0]]) == []


def test_apply_to_grid_repaints():
    g = grid_from_rows([[1, 0, 2]])
    objs = [Grid([[5]], origin=(0, 0)), Grid([[6]], origin=(2, 0))]
    out = apply_primitive(B3["apply_to_grid"], [g, objs])
    assert grid_to_rows(out) == [[5, 0, 6]]


def test_apply_to_grid_clips_out_of_bounds():
    g = grid_from_rows([[1]])
    out = apply_primitive(B3["apply_to_grid"], [g, [Grid([[5]], origin=(4, 4))]])
    assert grid_to_rows(out) == [[0]]


def test_compress_linear_horizontal():
    objs = run("get_objects2", [[1, 0, 2]])
    out = apply_primitive(B3["compress_objects_linear"], [objs])
    assert grid_to_rows(out) == [[1, 2]]


def test_compress_linear_vertical():
    objs = run("get_objects2", [[1], [0], [2]])
    out = apply_primitive(B3["compress_objects_linear"], [objs])
    assert grid_to_rows(out) == [[1], [2]]


def test_compress_quad_and_pad():
    objs = run("get_objects6", [[1, 0, 2], [0, 0, 0], [3, 0, 4]])
    quad = apply_primitive(B3["compress_objects_quad"], [objs])
    assert grid_to_rows(quad) == [[1, 2], [3, 4]]
    padded = apply_primitive(B3["compress_objects_quad_pad"], [objs])
    assert grid_to_rows(padded) == [[1, 0, 2], [0, 0, 0], [3, 0, 4]]


def test_compress_empty_errors():
    with pytest.raises(EvalError):
        apply_primitive(B3["compress_objects_linear"], [[]])
    with pytest.raises(EvalError):
        apply_primitive(B3["compress_objects_quad"], [[]])


def test_for_each_maps_lambda():
    objs = run("get_objects2", [[1, 0, 2]])
    out = apply_primitive(B3["for_each"], [objs, FunctionRef(B3["set_fg_color5"])])
    assert [grid_to_rows(o) for o in out] == [[[5]], [[5]]]


def test_for_each_rejects_bad_lambda():
    objs = run("get_objects2", [[1, 0, 2]])
    with pytest.raises(ProgramTypeError):
        apply_primitive(B3["for_each"], [objs, FunctionRef(B3["cellwiseOR"])])


def test_cellwise_or_list_folds():
    grids = [grid_from_rows([[1, 0]]), grid_from_rows([[0, 2]]), grid_from_rows([[0, 0]])]
    assert grid_to_rows(apply_primitive(B3["cellwise_OR_list"], [grids])) == [[1, 2]]
    with pytest.raises(EvalError):
        apply_primitive(B3["cellwise_OR_list"], [[]])


def test_get_pixels_and_size():
    g = grid_from_rows([[1, 0], [0, 3]])
    assert apply_primitive(B3["get_pixels"], [g]) == [1, 3]
    assert apply_primitive(B3["get_object_size"], [g]) == 2


def test_count_overloads():
    grids = [grid_from_rows([[1]]), grid_from_rows([[2]])]
    assert apply_primitive(B3["count"], [grids]) == 2
    assert apply_primitive(B3["count"], [[1, 2, 3]]) == 3
    # Grid overload: number of 4-way foreground components
    assert apply_primitive(B3["count"], [grid_from_rows([[1, 0, 1]])]) == 2


# ------------------------------------------------------------- v3 selectors

def _sized_objects():
    return run("get_objects2", [[1, 1, 0, 0, 2],
                                [1, 1, 0, 0, 0],
                                [1, 0, 0, 3, 3]])


def test_keep_largest_returns_argmax_object():
    objs = _sized_objects()
    sizes = [len(o.pixels) for o in objs]
    assert sorted(sizes) == [1, 2, 5]
    best = apply_primitive(B3["keep_largest"], [objs, sizes])
    assert len(best.pixels) == 5


def test_keep_smallest_and_filters():
    objs = _sized_objects()
    sizes = [len(o.pixels) for o in objs]
    small = apply_primitive(B3["keep_smallest"], [objs, sizes])
    assert len(small.pixels) == 1
    remaining = apply_primitive(B3["filter_largest"], [objs, sizes])
    assert sorted(len(o.pixels) for o in remaining) == [1, 2]
    remaining = apply_primitive(B3["filter_smallest"], [objs, sizes])
    assert sorted(len(o.pixels) for o in remaining) == [2, 5]


def test_filter_tie_break_leftmost_then_topmost():
    objs = run("get_objects2", [[1, 0, 2]])
    remaining = apply_primitive(B3["filter_largest"], [objs, [1, 1]])
    assert [o.origin for o in remaining] == [(2, 0)]


def test_selector_alignment_errors():
    objs = _sized_objects()
    with pytest.raises(EvalError):
        apply_primitive(B3["keep_largest"], [objs, [1, 2]])
    with pytest.raises(EvalError):
        apply_primitive(B3["keep_largest"], [[], []])


def test_symmetry_predicates():
    assert apply_primitive(B3["is_h_symmetrical"], [grid_from_rows([[1, 2, 1]])]) is True
    assert apply_primitive(B3["is_h_symmetrical"], [grid_from_rows([[1, 2, 3]])]) is False
    assert apply_primitive(B3["is_v_symmetrical"], [grid_from_rows([[1], [2], [1]])]) is True
    assert apply_primitive(B3["is_v_symmetrical"], [grid_from_rows([[1], [2], [2]])]) is False


def test_logical_not_scalar_and_list():
    assert apply_primitive(B3["logical_not"], [True]) is False
    assert apply_primitive(B3["logical_not"], [[True, False]]) == [False, True]


def test_keep_and_filter_boolean():
    objs = _sized_objects()
    picked = apply_primitive(B3["keep_boolean"], [objs, [False, True, True]])
    assert picked is objs[1]
    rest = apply_primitive(B3["filter_boolean"], [objs, [True, False, True]])
    assert rest == [objs[1]]
    with pytest.raises(EvalError):
        apply_primitive(B3["keep_boolean"], [objs, [False, False, False]])


def test_kind_mismatch_raises_type_error():
    with pytest.raises(ProgramTypeError):
        apply_primitive(B3["rot90"], [3])
    with pytest.raises(ProgramTypeError):
        apply_primitive(B3["keep_largest"], [grid_from_rows([[1]]), [1]])


def test_eval_size_cap():
    g = grid_from_rows([[1] * 30] * 30)
    big = apply_primitive(B3["upscale_by_three"], [g])  # 90x90 is fine
    assert big.width == 90
    with pytest.raises(EvalError):
        apply_primitive(B3["upscale_by_two"], [big])  # 180 exceeds the cap


def test_resolve_color_change_space():
    pairs = dsl.resolve_color_change()
    assert len(pairs) == 90
    assert all(a != b for a, b in pairs)
    assert pairs == sorted(pairs)


def test_every_primitive_has_a_golden_case():
    covered = set(GOLDEN_UNARY) | set(GOLDEN_BINARY)
    covered |= {f"set_fg_color{k}" for k in range(1, 10)}
    covered |= {f"get_objects{k}" for k in range(1, 7)}
    covered |= {
        "color_change", "apply_to_grid", "compress_objects_linear",
        "compress_objects_quad", "compress_objects_quad_pad", "for_each",
        "cellwise_OR_list", "get_pixels", "get_object_size", "count",
        "filter_largest", "filter_smallest", "keep_largest", "keep_smallest",
        "is_h_symmetrical", "is_v_symmetrical", "logical_not", "keep_boolean",
        "filter_boolean",
    }
    assert {s.name for s in registry(3)} <= covered


# ------------------------------------------------------------ algebra (fast)

def _grids(n=50, seed=0):
    return [random_grid((seed, i), (2, 9), (2, 9), 0.5) for i in range(n)]


def u(name, g):
    return apply_primitive(B3[name], [g])


def test_rotation_group():
    for g in _grids():
        assert u("rot90", u("rot90", u("rot90", u("rot90", g)))) == g
        assert u("rot90", u("rot90", g)) == u("rot180", g)
        assert u("rot90", u("rot180", g)) == u("rot270", g)


def test_mirror_involutions():
    for g in _grids():
        assert u("hmirror", u("hmirror", g)) == g
        assert u("vmirror", u("vmirror", g)) == g


def test_split_concat_inverses():
    for g in _grids(seed=1):
        if g.width % 2 == 0:
            two = apply_primitive(B3["hconcat"], [u("lefthalf", g), u("righthalf", g)])
            assert two == g
        if g.height % 2 == 0:
            two = apply_primitive(B3["vconcat"], [u("tophalf", g), u("bottomhalf", g)])
            assert two == g


def test_cellwise_identities():
    for g in _grids(seed=2):
        blank = Grid(np.zeros_like(g.cells))
        assert apply_primitive(B3["cellwiseOR"], [g, blank]) == g
        assert apply_primitive(B3["cellwiseXOR"], [g, g]) == blank
        assert apply_primitive(B3["cellwiseAND"], [g, g]) == g
        assert apply_primitive(B3["cellwiseDifference"], [g, blank]) == g
        assert apply_primitive(B3["cellwiseDifference"], [g, g]) == blank
