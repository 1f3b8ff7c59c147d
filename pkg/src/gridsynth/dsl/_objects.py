"""Object detection and manipulation primitives (versions 2 and 3 of the DSL).

The six ``get_objectsN`` variants implement different notions of "object":

1. uniform-color rectangles, filled or frame-like, cropped with their content
2. 4-way adjacent foreground components on a black background
3. 8-way adjacent foreground components on a black background
4. 4-way adjacent uniform-color components on any background color
5. 8-way adjacent uniform-color components on any background color
6. shapes separated by fully-background rows/columns (grid-like clusters)

All variants return crops whose ``origin`` is the bounding-box upper-left in
the source grid, ordered by reading position (top-to-bottom, left-to-right).
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from ..errors import EvalError
from ..grid import BACKGROUND, Grid
from ._transforms import cellwiseOR, hconcat, vconcat

_FOUR_WAY = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_EIGHT_WAY = np.ones((3, 3), dtype=bool)


def _component_slices(mask: np.ndarray, eight_way: bool):
    labels, n = ndimage.label(mask, structure=_EIGHT_WAY if eight_way else _FOUR_WAY)
    out = []
    for i, sl in enumerate(ndimage.find_objects(labels, max_label=n), start=1):
        if sl is None:
            continue
        out.append((labels[sl] == i, sl))
    return out


def _crop_component(g: Grid, member: np.ndarray, sl) -> Grid:
    cells = np.where(member, g.cells[sl], np.int8(BACKGROUND))
    y0, x0 = sl[0].start, sl[1].start
    return Grid._wrap(cells, (g.origin[0] + x0, g.origin[1] + y0))


def _reading_order(objs: list[Grid]) -> list[Grid]:
    return sorted(objs, key=lambda o: (o.origin[1], o.origin[0]))


def get_objects2(g: Grid) -> list[Grid]:
    comps = _component_slices(g.cells != BACKGROUND, eight_way=False)
    return _reading_order([_crop_component(g, m, sl) for m, sl in comps])


def get_objects3(g: Grid) -> list[Grid]:
    comps = _component_slices(g.cells != BACKGROUND, eight_way=True)
    return _reading_order([_crop_component(g, m, sl) for m, sl in comps])


def _dominant_color(cells: np.ndarray) -> int:
    counts = np.bincount(cells.ravel(), minlength=10)
    return int(np.argmax(counts))


def _uniform_color_objects(g: Grid, eight_way: bool) -> list[Grid]:
    bg = _dominant_color(g.cells)
    objs = []
    for color in range(10):
        if color == bg or not np.any(g.cells == color):
            continue
        for member, sl in _component_slices(g.cells == color, eight_way):
            cells = np.where(member, np.int8(color), np.int8(BACKGROUND))
            objs.append(Grid._wrap(cells, (g.origin[0] + sl[1].start, g.origin[1] + sl[0].start)))
    return _reading_order(objs)


def get_objects4(g: Grid) -> list[Grid]:
    return _uniform_color_objects(g, eight_way=False)


def get_objects5(g: Grid) -> list[Grid]:
    return _uniform_color_objects(g, eight_way=True)


def _is_rectangle_component(member: np.ndarray) -> bool:
    """True when the component fills its bounding box, or exactly its border."""
    h, w = member.shape
    if h < 2 or w < 2:
        return False
    if member.all():
        return True
    border = np.zeros_like(member)
    border[0, :] = border[-1, :] = border[:, 0] = border[:, -1] = True
    return bool((member == border).all())


def get_objects1(g: Grid) -> list[Grid]:
    """Uniform-color rectangles (filled or frames); crops keep interior content."""
    objs = []
    for color in range(1, 10):
        if not np.any(g.cells == color):
            continue
        for member, sl in _component_slices(g.cells == color, eight_way=True):
            if _is_rectangle_component(member):
                y0, x0 = sl[0].start, sl[1].start
                objs.append(Grid._wrap(g.cells[sl], (g.origin[0] + x0, g.origin[1] + y0)))
    return _reading_order(objs)


def _bands(empty: np.ndarray) -> list[tuple[int, int]]:
    bands, start = [], None
    for i, e in enumerate(empty):
        if not e and start is None:
            start = i
        elif e and start is not None:
            bands.append((start, i))
            start = None
    if start is not None:
        bands.append((start, len(empty)))
    return bands


def get_objects6(g: Grid) -> list[Grid]:
    """Shapes separated by fully-background rows/columns, cropped to content."""
    fg = g.cells != BACKGROUND
    row_bands = _bands(~fg.any(axis=1))
    col_bands = _bands(~fg.any(axis=0))
    objs = []
    for y0, y1 in row_bands:
        for x0, x1 in col_bands:
            region = g.cells[y0:y1, x0:x1]
            ys, xs = np.nonzero(region)
            if len(ys) == 0:
                continue
            by0, by1 = ys.min(), ys.max() + 1
            bx0, bx1 = xs.min(), xs.max() + 1
            objs.append(
                Grid._wrap(region[by0:by1, bx0:bx1],
                           (g.origin[0] + x0 + bx0, g.origin[1] + y0 + by0))
            )
    return _reading_order(objs)


# --------------------------------------------------------------- composition

def apply_to_grid(g: Grid, objs: list[Grid]) -> Grid:
    """Repaint the grid from the given objects: all previous foreground is
    blanked, then each object's pixels land at its origin (later objects win).
    Pixels falling outside the raster are discarded."""
    canvas = np.zeros_like(g.cells)
    h, w = canvas.shape
    for obj in objs:
        dx = obj.origin[0] - g.origin[0]
        dy = obj.origin[1] - g.origin[1]
        for x, y, color in obj.pixels:
            px, py = x + dx, y + dy
            if 0 <= px < w and 0 <= py < h:
                canvas[py, px] = color
    return Grid._wrap(canvas, g.origin)


def _pad_to(cells: np.ndarray, height: int, width: int) -> np.ndarray:
    out = np.zeros((height, width), dtype=cells.dtype)
    out[: cells.shape[0], : cells.shape[1]] = cells
    return out


def compress_objects_linear(objs: list[Grid]) -> Grid:
    """Concatenate objects in a line; the axis follows the spread of their
    origins (wider spread in x means horizontal, ties go horizontal)."""
    if not objs:
        raise EvalError("compress_objects_linear requires at least one object")
    if len(objs) == 1:
        return Grid(objs[0].cells)
    xs = [o.origin[0] for o in objs]
    ys = [o.origin[1] for o in objs]
    horizontal = np.var(xs) >= np.var(ys)
    if horizontal:
        ordered = sorted(objs, key=lambda o: (o.origin[0], o.origin[1]))
        height = max(o.height for o in ordered)
        cells = np.hstack([_pad_to(o.cells, height, o.width) for o in ordered])
    else:
        ordered = sorted(objs, key=lambda o: (o.origin[1], o.origin[0]))
        width = max(o.width for o in ordered)
        cells = np.vstack([_pad_to(o.cells, o.height, width) for o in ordered])
    return Grid(cells)


def _quad_template(objs: list[Grid]) -> tuple[int, int]:
    n = len(objs)
    if n <= 4:
        return 2, 2
    if n <= 6:
        xs = [o.origin[0] for o in objs]
        ys = [o.origin[1] for o in objs]
        spread_x = max(xs) - min(xs)
        spread_y = max(ys) - min(ys)
        return (2, 3) if spread_x >= spread_y else (3, 2)
    if n <= 9:
        return 3, 3
    raise EvalError(f"compress_objects_quad supports at most 9 objects, got {n}")


def _compress_quad(objs: list[Grid], gap: int) -> Grid:
    if not objs:
        raise EvalError("compress_objects_quad requires at least one object")
    if len(objs) == 1:
        return Grid(objs[0].cells)
    rows, cols = _quad_template(objs)
    ordered = sorted(objs, key=lambda o: (o.origin[1], o.origin[0]))
    tile_h = max(o.height for o in ordered)
    tile_w = max(o.width for o in ordered)
    out_h = rows * tile_h + (rows - 1) * gap
    out_w = cols * tile_w + (cols - 1) * gap
    canvas = np.zeros((out_h, out_w), dtype=np.int8)
    for i, obj in enumerate(ordered):
        r, c = divmod(i, cols)
        y0 = r * (tile_h + gap)
        x0 = c * (tile_w + gap)
        canvas[y0 : y0 + obj.height, x0 : x0 + obj.width] = obj.cells
    return Grid(canvas)


def compress_objects_quad(objs: list[Grid]) -> Grid:
    return _compress_quad(objs, gap=0)


def compress_objects_quad_pad(objs: list[Grid]) -> Grid:
    return _compress_quad(objs, gap=1)


def cellwise_OR_list(objs: list[Grid]) -> Grid:
    if not objs:
        raise EvalError("cellwise_OR_list requires at least one grid")
    out = objs[0]
    for other in objs[1:]:
        out = cellwiseOR(out, other)
    return out


# ----------------------------------------------------------------- measures

def get_pixels(g: Grid) -> list[int]:
    return [color for _, _, color in g.pixels]


def get_object_size(g: Grid) -> int:
    return len(g.pixels)


def count_subobjects(g: Grid) -> int:
    """Sub-object count of a grid: 4-way foreground components on black."""
    return len(_component_slices(g.cells != BACKGROUND, eight_way=False))


# ------------------------------------------------------- selection (v3 ops)

def _check_aligned(objs: list[Grid], values: list, what: str) -> None:
    if not objs:
        raise EvalError(f"{what} requires a nonempty object list")
    if len(objs) != len(values):
        raise EvalError(f"{what}: {len(objs)} objects but {len(values)} values")


def _extreme_index(objs: list[Grid], values: list[int], largest: bool) -> int:
    target = max(values) if largest else min(values)
    tied = [i for i, v in enumerate(values) if v == target]
    # Leftmost origin first, then topmost, mirrors the documented tie-break.
    return min(tied, key=lambda i: (objs[i].origin[0], objs[i].origin[1], i))


def keep_largest(objs: list[Grid], values: list[int]) -> Grid:
    _check_aligned(objs, values, "keep_largest")
    return objs[_extreme_index(objs, values, largest=True)]


def keep_smallest(objs: list[Grid], values: list[int]) -> Grid:
    _check_aligned(objs, values, "keep_smallest")
    return objs[_extreme_index(objs, values, largest=False)]


def filter_largest(objs: list[Grid], values: list[int]) -> list[Grid]:
    _check_aligned(objs, values, "filter_largest")
    drop = _extreme_index(objs, values, largest=True)
    return [o for i, o in enumerate(objs) if i != drop]


def filter_smallest(objs: list[Grid], values: list[int]) -> list[Grid]:
    _check_aligned(objs, values, "filter_smallest")
    drop = _extreme_index(objs, values, largest=False)
    return [o for i, o in enumerate(objs) if i != drop]


def is_h_symmetrical(g: Grid) -> bool:
    return bool(np.array_equal(g.cells, g.cells[:, ::-1]))


def is_v_symmetrical(g: Grid) -> bool:
    return bool(np.array_equal(g.cells, g.cells[::-1, :]))


def logical_not(value):
    if isinstance(value, list):
        return [not v for v in value]
    return not value


def keep_boolean(objs: list[Grid], flags: list[bool]) -> Grid:
    _check_aligned(objs, flags, "keep_boolean")
    for obj, flag in zip(objs, flags):
        if flag:
            return obj
    raise EvalError("keep_boolean: no object with a True flag")


def filter_boolean(objs: list[Grid], flags: list[bool]) -> list[Grid]:
    _check_aligned(objs, flags, "filter_boolean")
    return [o for o, flag in zip(objs, flags) if not flag]
