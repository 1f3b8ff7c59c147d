"""Grid-to-grid primitive implementations (the version-1 layer of the DSL).

Orientation conventions used throughout:

* ``hmirror`` flips left-right (mirror across the vertical axis), ``vmirror``
  flips top-bottom.  ``rot90`` is clockwise and ``rot270`` is its inverse.
* Shifts, shears, and gravity moves never wrap; pixels pushed outside the
  raster are discarded.
* Sub-region extractors (halves, thirds, fourths, quadrants, remove_outline)
  shift the result's origin by the region offset so overlay primitives can
  put content back where it came from; every other operation keeps the first
  argument's origin.
"""

from __future__ import annotations

import numpy as np

from ..errors import EvalError
from ..grid import BACKGROUND, Grid


def _crop(g: Grid, x0: int, y0: int, x1: int, y1: int) -> Grid:
    if x1 <= x0 or y1 <= y0:
        raise EvalError(f"crop [{x0}:{x1}, {y0}:{y1}] of {g.width}x{g.height} grid is empty")
    return Grid._wrap(g.cells[y0:y1, x0:x1], (g.origin[0] + x0, g.origin[1] + y0))


def _like(g: Grid, cells: np.ndarray) -> Grid:
    return Grid._wrap(np.ascontiguousarray(cells, dtype=np.int8), g.origin)


# ---------------------------------------------------------------- recoloring

def set_fg_color(k: int):
    def apply(g: Grid) -> Grid:
        return _like(g, np.where(g.cells != BACKGROUND, np.int8(k), g.cells))

    return apply


def color_change(g: Grid, frm: int, to: int) -> Grid:
    return _like(g, np.where(g.cells == frm, np.int8(to), g.cells))


def _fg_counts(cells: np.ndarray) -> np.ndarray:
    fg = cells[cells != BACKGROUND]
    return np.bincount(fg, minlength=10)


def _major_fg_color(cells: np.ndarray) -> int | None:
    """Most frequent foreground color; ties broken by lowest color value."""
    counts = _fg_counts(cells)
    if counts.sum() == 0:
        return None
    return int(np.argmax(counts[1:]) + 1)


def _minor_fg_color(cells: np.ndarray) -> int | None:
    counts = _fg_counts(cells)
    present = np.nonzero(counts[1:])[0] + 1
    if len(present) == 0:
        return None
    return int(present[np.argmin(counts[present])])


def invert_colors(g: Grid) -> Grid:
    major = _major_fg_color(g.cells)
    minor = _minor_fg_color(g.cells)
    if major is None or major == minor:
        return g
    cells = g.cells.copy()
    cells[g.cells == major] = minor
    cells[g.cells == minor] = major
    return _like(g, cells)


def get_major_pixel(g: Grid) -> Grid:
    color = _major_fg_color(g.cells)
    return _like(g, np.full((1, 1), BACKGROUND if color is None else color, dtype=np.int8))


def get_minor_pixel(g: Grid) -> Grid:
    color = _minor_fg_color(g.cells)
    return _like(g, np.full((1, 1), BACKGROUND if color is None else color, dtype=np.int8))


# ----------------------------------------------------------------- geometry

def vmirror(g: Grid) -> Grid:
    return _like(g, g.cells[::-1, :])


def hmirror(g: Grid) -> Grid:
    return _like(g, g.cells[:, ::-1])


def rot90(g: Grid) -> Grid:
    return _like(g, np.rot90(g.cells, k=-1))


def rot180(g: Grid) -> Grid:
    return _like(g, g.cells[::-1, ::-1])


def rot270(g: Grid) -> Grid:
    return _like(g, np.rot90(g.cells, k=1))


def _shift(g: Grid, dx: int, dy: int) -> Grid:
    h, w = g.cells.shape
    out = np.zeros_like(g.cells)
    xs = slice(max(0, dx), min(w, w + dx))
    ys = slice(max(0, dy), min(h, h + dy))
    sxs = slice(max(0, -dx), min(w, w - dx))
    sys_ = slice(max(0, -dy), min(h, h - dy))
    out[ys, xs] = g.cells[sys_, sxs]
    return _like(g, out)


def shift_left(g: Grid) -> Grid:
    return _shift(g, -1, 0)


def shift_right(g: Grid) -> Grid:
    return _shift(g, 1, 0)


def shift_up(g: Grid) -> Grid:
    return _shift(g, 0, -1)


def shift_down(g: Grid) -> Grid:
    return _shift(g, 0, 1)


def upscale_horizontal_by_two(g: Grid) -> Grid:
    return _like(g, np.repeat(g.cells, 2, axis=1))


def upscale_vertical_by_two(g: Grid) -> Grid:
    return _like(g, np.repeat(g.cells, 2, axis=0))


def upscale_by_two(g: Grid) -> Grid:
    return _like(g, np.repeat(np.repeat(g.cells, 2, axis=0), 2, axis=1))


def upscale_by_three(g: Grid) -> Grid:
    return _like(g, np.repeat(np.repeat(g.cells, 3, axis=0), 3, axis=1))


# ------------------------------------------------------------------ gravity

def _compact_left(cells: np.ndarray) -> np.ndarray:
    out = np.zeros_like(cells)
    for y in range(cells.shape[0]):
        vals = cells[y][cells[y] != BACKGROUND]
        out[y, : len(vals)] = vals
    return out


def gravitate_left(g: Grid) -> Grid:
    return _like(g, _compact_left(g.cells))


def gravitate_right(g: Grid) -> Grid:
    return _like(g, _compact_left(g.cells[:, ::-1])[:, ::-1])


def gravitate_up(g: Grid) -> Grid:
    return _like(g, _compact_left(g.cells.T).T)


def gravitate_down(g: Grid) -> Grid:
    return _like(g, _compact_left(g.cells[::-1, :].T).T[::-1, :])


def gravitate_left_right(g: Grid) -> Grid:
    """Left-half pixels stack against the left edge, right-half against the right."""
    w = g.width
    k = w // 2
    out = np.zeros_like(g.cells)
    out[:, :k] = _compact_left(g.cells[:, :k])
    out[:, k:] = _compact_left(g.cells[:, k:][:, ::-1])[:, ::-1]
    return _like(g, out)


def gravitate_top_down(g: Grid) -> Grid:
    h = g.height
    k = h // 2
    out = np.zeros_like(g.cells)
    out[:k, :] = _compact_left(g.cells[:k, :].T).T
    out[k:, :] = _compact_left(g.cells[k:, :][::-1, :].T).T[::-1, :]
    return _like(g, out)


# ------------------------------------------------------------------- pieces

def tophalf(g: Grid) -> Grid:
    return _crop(g, 0, 0, g.width, g.height // 2)


def bottomhalf(g: Grid) -> Grid:
    return _crop(g, 0, g.height - g.height // 2, g.width, g.height)


def lefthalf(g: Grid) -> Grid:
    return _crop(g, 0, 0, g.width // 2, g.height)


def righthalf(g: Grid) -> Grid:
    return _crop(g, g.width - g.width // 2, 0, g.width, g.height)


def _nth_slice(n: int, k: int, i: int) -> tuple[int, int]:
    # Partition 0..n into k pieces at floor boundaries; pieces differ by <= 1.
    return i * n // k, (i + 1) * n // k


def _vertical_piece(g: Grid, k: int, i: int) -> Grid:
    y0, y1 = _nth_slice(g.height, k, i)
    return _crop(g, 0, y0, g.width, y1)


def _horizontal_piece(g: Grid, k: int, i: int) -> Grid:
    x0, x1 = _nth_slice(g.width, k, i)
    return _crop(g, x0, 0, x1, g.height)


# The center-third names follow the stacking of the pieces they merge with:
# hcenterthird joins topthird/bottomthird (row bands), vcenterthird joins
# leftthird/rightthird (column bands), so three-way split-merge programs
# always combine same-shaped pieces.

def topthird(g: Grid) -> Grid:
    return _vertical_piece(g, 3, 0)


def hcenterthird(g: Grid) -> Grid:
    return _vertical_piece(g, 3, 1)


def bottomthird(g: Grid) -> Grid:
    return _vertical_piece(g, 3, 2)


def leftthird(g: Grid) -> Grid:
    return _horizontal_piece(g, 3, 0)


def vcenterthird(g: Grid) -> Grid:
    return _horizontal_piece(g, 3, 1)


def rightthird(g: Grid) -> Grid:
    return _horizontal_piece(g, 3, 2)


def hfirstfourth(g: Grid) -> Grid:
    return _horizontal_piece(g, 4, 0)


def hsecondfourth(g: Grid) -> Grid:
    return _horizontal_piece(g, 4, 1)


def hthirdfourth(g: Grid) -> Grid:
    return _horizontal_piece(g, 4, 2)


def hlastfourth(g: Grid) -> Grid:
    return _horizontal_piece(g, 4, 3)


def vfirstfourth(g: Grid) -> Grid:
    return _vertical_piece(g, 4, 0)


def vsecondfourth(g: Grid) -> Grid:
    return _vertical_piece(g, 4, 1)


def vthirdfourth(g: Grid) -> Grid:
    return _vertical_piece(g, 4, 2)


def vlastfourth(g: Grid) -> Grid:
    return _vertical_piece(g, 4, 3)


def first_quadrant(g: Grid) -> Grid:
    return _crop(g, 0, 0, g.width // 2, g.height // 2)


def second_quadrant(g: Grid) -> Grid:
    return _crop(g, g.width - g.width // 2, 0, g.width, g.height // 2)


def third_quadrant(g: Grid) -> Grid:
    return _crop(g, 0, g.height - g.height // 2, g.width // 2, g.height)


def fourth_quadrant(g: Grid) -> Grid:
    return _crop(g, g.width - g.width // 2, g.height - g.height // 2, g.width, g.height)


# ------------------------------------------------------------ symmetrization

def symmetrize_left_around_vertical(g: Grid) -> Grid:
    k = g.width // 2
    cells = g.cells.copy()
    cells[:, g.width - k :] = g.cells[:, :k][:, ::-1]
    return _like(g, cells)


def symmetrize_right_around_vertical(g: Grid) -> Grid:
    k = g.width // 2
    cells = g.cells.copy()
    cells[:, :k] = g.cells[:, g.width - k :][:, ::-1]
    return _like(g, cells)


def symmetrize_top_around_horizontal(g: Grid) -> Grid:
    k = g.height // 2
    cells = g.cells.copy()
    cells[g.height - k :, :] = g.cells[:k, :][::-1, :]
    return _like(g, cells)


def symmetrize_bottom_around_horizontal(g: Grid) -> Grid:
    k = g.height // 2
    cells = g.cells.copy()
    cells[:k, :] = g.cells[g.height - k :, :][::-1, :]
    return _like(g, cells)


# ------------------------------------------------------------ rows and cols

def duplicate_top_row(g: Grid) -> Grid:
    return _like(g, np.vstack([g.cells[:1], g.cells]))


def duplicate_bottom_row(g: Grid) -> Grid:
    return _like(g, np.vstack([g.cells, g.cells[-1:]]))


def duplicate_left_column(g: Grid) -> Grid:
    return _like(g, np.hstack([g.cells[:, :1], g.cells]))


def duplicate_right_column(g: Grid) -> Grid:
    return _like(g, np.hstack([g.cells, g.cells[:, -1:]]))


def remove_outline(g: Grid) -> Grid:
    return _crop(g, 1, 1, g.width - 1, g.height - 1)


def insert_outline(g: Grid) -> Grid:
    return Grid._wrap(np.pad(g.cells, 1), (g.origin[0] - 1, g.origin[1] - 1))


# ------------------------------------------------------------------- shears

def _shift_row(row: np.ndarray, s: int) -> np.ndarray:
    out = np.zeros_like(row)
    w = len(row)
    if s >= w or s <= -w:
        return out
    if s >= 0:
        out[s:] = row[: w - s]
    else:
        out[: w + s] = row[-s:]
    return out


def _shear(g: Grid, amount) -> Grid:
    h = g.height
    rows = [_shift_row(g.cells[y], amount(h - 1 - y)) for y in range(h)]
    return _like(g, np.stack(rows))


def shear_grid_left(g: Grid) -> Grid:
    return _shear(g, lambda r: -r)


def shear_grid_right(g: Grid) -> Grid:
    return _shear(g, lambda r: r)


def shear_grid_zigzag(g: Grid) -> Grid:
    return _shear(g, lambda r: (-1, 0, 1)[r % 3])


# ----------------------------------------------------------- two-grid merges

def _require_same_shape(a: Grid, b: Grid, op: str) -> None:
    if a.cells.shape != b.cells.shape:
        raise EvalError(f"{op} requires two grids of the same shape, got {a.width}x{a.height} and {b.width}x{b.height}")


def cellwiseOR(a: Grid, b: Grid) -> Grid:
    _require_same_shape(a, b, "cellwiseOR")
    return _like(a, np.where(a.cells != BACKGROUND, a.cells, b.cells))


def cellwiseAND(a: Grid, b: Grid) -> Grid:
    _require_same_shape(a, b, "cellwiseAND")
    return _like(a, np.where((a.cells != BACKGROUND) & (b.cells != BACKGROUND), a.cells, np.int8(BACKGROUND)))


def cellwiseXOR(a: Grid, b: Grid) -> Grid:
    _require_same_shape(a, b, "cellwiseXOR")
    only_a = (a.cells != BACKGROUND) & (b.cells == BACKGROUND)
    only_b = (b.cells != BACKGROUND) & (a.cells == BACKGROUND)
    return _like(a, np.where(only_a, a.cells, np.where(only_b, b.cells, np.int8(BACKGROUND))))


def cellwiseDifference(a: Grid, b: Grid) -> Grid:
    _require_same_shape(a, b, "cellwiseDifference")
    keep = (a.cells != BACKGROUND) & (b.cells == BACKGROUND)
    return _like(a, np.where(keep, a.cells, np.int8(BACKGROUND)))


def cellwiseNOR(a: Grid, b: Grid) -> Grid:
    _require_same_shape(a, b, "cellwiseNOR")
    # Paint the first argument's dominant foreground color where neither grid
    # has a pixel; color 5 when the first argument has no foreground at all.
    dom = _major_fg_color(a.cells)
    fill = np.int8(5 if dom is None else dom)
    empty = (a.cells == BACKGROUND) & (b.cells == BACKGROUND)
    return _like(a, np.where(empty, fill, np.int8(BACKGROUND)))


def vconcat(a: Grid, b: Grid) -> Grid:
    if a.width != b.width:
        raise EvalError(f"vconcat requires equal widths, got {a.width} and {b.width}")
    return _like(a, np.vstack([a.cells, b.cells]))


def hconcat(a: Grid, b: Grid) -> Grid:
    if a.height != b.height:
        raise EvalError(f"hconcat requires equal heights, got {a.height} and {b.height}")
    return _like(a, np.hstack([a.cells, b.cells]))
