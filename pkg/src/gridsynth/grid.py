"""The Grid value type plus construction, comparison, and random sampling helpers.

A grid is an immutable raster of colors 0-9 where color 0 is the background.
Grids carry an ``origin`` offset so that object crops remember where they came
from inside an enclosing grid; origin is ignored by structural equality and
only matters to the object-placement primitives.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidConfig, MalformedGrid

# Task-facing grids follow the ARC convention of at most 30x30.  Intermediate
# values during program evaluation may exceed that transiently; the evaluator
# aborts past MAX_EVAL_SIDE to bound runaway upscale/concat chains.
MAX_TASK_SIDE = 30
MAX_EVAL_SIDE = 120

NUM_COLORS = 10
BACKGROUND = 0


class Grid:
    """Immutable 2D raster of colors with an optional placement origin."""

    __slots__ = ("_cells", "_origin", "_hash")

    def __init__(self, cells, origin: tuple[int, int] = (0, 0)):
        a = np.array(cells, dtype=np.int8)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise MalformedGrid(f"grid must be a nonempty 2D raster, got shape {a.shape}")
        if a.min() < 0 or a.max() >= NUM_COLORS:
            raise MalformedGrid("grid colors must be integers in 0-9")
        a.setflags(write=False)
        self._cells = a
        self._origin = (int(origin[0]), int(origin[1]))
        self._hash = None

    @classmethod
    def _wrap(cls, cells: np.ndarray, origin: tuple[int, int] = (0, 0)) -> "Grid":
        """Fast path for primitive internals: wrap an int8 array whose values
        are already known to be valid colors, skipping validation."""
        g = object.__new__(cls)
        if cells.flags.writeable:
            cells = cells.copy()
            cells.setflags(write=False)
        g._cells = cells
        g._origin = origin
        g._hash = None
        return g

    @property
    def cells(self) -> np.ndarray:
        """Read-only (height, width) array; cells[y, x] is the color at (x, y)."""
        return self._cells

    @property
    def width(self) -> int:
        return self._cells.shape[1]

    @property
    def height(self) -> int:
        return self._cells.shape[0]

    @property
    def origin(self) -> tuple[int, int]:
        return self._origin

    @property
    def pixels(self) -> list[tuple[int, int, int]]:
        """Foreground pixels as (x, y, color) tuples in row-major order."""
        ys, xs = np.nonzero(self._cells)
        return [(int(x), int(y), int(self._cells[y, x])) for y, x in zip(ys, xs)]

    def with_origin(self, origin: tuple[int, int]) -> "Grid":
        return Grid(self._cells, origin)

    def shifted_origin(self, dx: int, dy: int) -> "Grid":
        ox, oy = self._origin
        return Grid(self._cells, (ox + dx, oy + dy))

    def content_key(self) -> bytes:
        """Stable content hash key (shape + cells, origin excluded)."""
        return self._cells.shape[0].to_bytes(2, "big") + self._cells.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self._cells.shape == other._cells.shape and np.array_equal(
            self._cells, other._cells
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.content_key())
        return self._hash

    def __repr__(self) -> str:
        rows = ["".join(str(c) for c in row) for row in self._cells.tolist()]
        return f"Grid({self.width}x{self.height} origin={self._origin} {'|'.join(rows)})"


def grid_from_rows(rows: Sequence[Sequence[int]]) -> Grid:
    """Build a Grid from a row-major 2D array of colors (the ARC JSON form)."""
    if not isinstance(rows, (list, tuple)) or len(rows) == 0:
        raise MalformedGrid("rows must be a nonempty list of rows")
    widths = set()
    for row in rows:
        if not isinstance(row, (list, tuple)):
            raise MalformedGrid("each row must be a list of colors")
        widths.add(len(row))
    if len(widths) != 1:
        raise MalformedGrid(f"ragged rows: widths {sorted(widths)}")
    if widths == {0}:
        raise MalformedGrid("rows must be nonempty")
    a = np.asarray(rows)
    if not np.issubdtype(a.dtype, np.integer):
        raise MalformedGrid("grid colors must be integers")
    return Grid(a)


def grid_to_rows(g: Grid) -> list[list[int]]:
    """Inverse of :func:`grid_from_rows`; rows[y][x] is the color at (x, y)."""
    return [[int(c) for c in row] for row in g.cells.tolist()]


def pixelwise_similarity(a: Grid, b: Grid) -> float:
    """Fraction of cells (background included) with equal color; 0 on shape mismatch."""
    if a.cells.shape != b.cells.shape:
        return 0.0
    return float(np.mean(a.cells == b.cells))


def random_cells(
    rng: np.random.Generator,
    width: int,
    height: int,
    density: float,
    palette: Sequence[int],
) -> np.ndarray:
    colors = rng.choice(np.asarray(palette, dtype=np.int8), size=(height, width))
    mask = rng.random((height, width)) < density
    return np.where(mask, colors, np.int8(BACKGROUND))


def random_grid(
    seed: int,
    width_range: tuple[int, int] = (3, 10),
    height_range: tuple[int, int] = (3, 10),
    density: float = 0.4,
    palette: Iterable[int] = tuple(range(1, 10)),
) -> Grid:
    """Deterministically sample a grid: a pure function of seed and parameters."""
    palette = tuple(palette)
    if not palette:
        raise InvalidConfig("palette must be nonempty")
    if any(not (0 <= c < NUM_COLORS) for c in palette):
        raise InvalidConfig("palette colors must be in 0-9")
    if not (0.0 <= density <= 1.0):
        raise InvalidConfig("density must be in [0, 1]")
    for lo, hi in (width_range, height_range):
        if not (1 <= lo <= hi <= MAX_TASK_SIDE):
            raise InvalidConfig("size ranges must satisfy 1 <= lo <= hi <= 30")
    rng = np.random.default_rng(seed)
    w = int(rng.integers(width_range[0], width_range[1] + 1))
    h = int(rng.integers(height_range[0], height_range[1] + 1))
    return Grid(random_cells(rng, w, h, density, palette))
