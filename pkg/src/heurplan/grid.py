"""Occupancy grids, the 8-connected successor model, and planner feature maps.

Cells are (row, col) tuples. A map is a boolean occupancy field where True
marks an obstacle. Orthogonal moves cost 1, diagonal moves cost sqrt(2), and
an edge is traversable iff its *destination* cell is free (corner-cutting
between two diagonally adjacent obstacles is therefore allowed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

Cell = tuple[int, int]

SQRT2 = math.sqrt(2.0)

# (drow, dcol, step cost) for the 8 neighbors
MOVES: tuple[tuple[int, int, float], ...] = (
    (-1, 0, 1.0),
    (1, 0, 1.0),
    (0, -1, 1.0),
    (0, 1, 1.0),
    (-1, -1, SQRT2),
    (-1, 1, SQRT2),
    (1, -1, SQRT2),
    (1, 1, SQRT2),
)


class Edge(NamedTuple):
    src: Cell
    dst: Cell
    cost: float


@dataclass(frozen=True)
class GridMap:
    """Binary occupancy field; True = obstacle. Immutable after construction."""

    occupancy: np.ndarray

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.ndim != 2 or occ.shape[0] < 1 or occ.shape[1] < 1:
            raise ValueError(f"occupancy must be a non-empty 2D field, got shape {occ.shape}")
        occ.flags.writeable = False
        object.__setattr__(self, "occupancy", occ)

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.occupancy[cell]

    def diagonal(self) -> float:
        """Length of the map diagonal in cells, used as a distance scale."""
        return math.hypot(self.height, self.width)


def successors(grid: GridMap, v: Cell) -> list[Edge]:
    """All in-bounds edges leaving ``v`` (up to 8), regardless of occupancy."""
    if not grid.in_bounds(v):
        raise ValueError(f"cell {v} outside {grid.height}x{grid.width} map")
    r, c = v
    h, w = grid.height, grid.width
    out = []
    for dr, dc, cost in MOVES:
        nr, nc = r + dr, c + dc
        if 0 <= nr < h and 0 <= nc < w:
            out.append(Edge(v, (nr, nc), cost))
    return out


def is_valid(grid: GridMap, e: Edge) -> bool:
    """Destination-only validity: an edge is blocked iff its target is occupied."""
    return not grid.occupancy[e.dst]


def obstacle_distance(grid: GridMap) -> np.ndarray:
    """Exact Euclidean distance from every cell to the nearest obstacle.

    Occupied cells map to 0. A map without any obstacle maps every cell to
    the diagonal sentinel sqrt(h^2 + w^2) so downstream features stay finite.
    """
    occ = grid.occupancy
    if not occ.any():
        return np.full(occ.shape, grid.diagonal(), dtype=np.float64)
    return ndimage.distance_transform_edt(~occ).astype(np.float64)


def goal_distance(height: int, width: int, goal: Cell) -> np.ndarray:
    """Straight-line Euclidean distance from every cell to ``goal``, ignoring obstacles."""
    gr, gc = goal
    if not (0 <= gr < height and 0 <= gc < width):
        raise ValueError(f"goal {goal} outside {height}x{width} map")
    rows = np.arange(height, dtype=np.float64)[:, None] - gr
    cols = np.arange(width, dtype=np.float64)[None, :] - gc
    return np.hypot(rows, cols)


@dataclass(frozen=True)
class FeatureStack:
    """Network input: 3 stacked channels plus the goal they were built for.

    channel 0: occupancy as 0/1
    channel 1: distance to the nearest obstacle, scaled by the map diagonal
    channel 2: straight-line distance to the goal, scaled by the same diagonal
    """

    channels: np.ndarray
    goal: Cell

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float64)
        if ch.ndim != 3 or ch.shape[0] != 3:
            raise ValueError(f"expected (3, H, W) channels, got shape {ch.shape}")
        ch.flags.writeable = False
        object.__setattr__(self, "channels", ch)

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]


def build_features(grid: GridMap, goal: Cell) -> FeatureStack:
    """Extract the 3-channel input stack for ``grid`` with goal ``goal``.

    Distance channels are divided by the map diagonal so every value lies
    in [0, 1] independent of map size.
    """
    if not grid.in_bounds(goal):
        raise ValueError(f"goal {goal} outside {grid.height}x{grid.width} map")
    if grid.occupancy[goal]:
        raise ValueError(f"goal {goal} is occupied")
    diag = grid.diagonal()
    ch = np.stack(
        [
            grid.occupancy.astype(np.float64),
            obstacle_distance(grid) / diag,
            goal_distance(grid.height, grid.width, goal) / diag,
        ]
    )
    return FeatureStack(ch, goal)


def canvas_shape(height: int, width: int) -> tuple[int, int]:
    """Canvas with at least 8 cells of slack, rounded up so both dimensions
    stay divisible by 8 (the network's stride budget). Training places maps
    at random offsets inside this canvas; inference embeds them the same way
    so the network always sees the obstacle border it was trained with."""
    return 8 * -(-(height + 8) // 8), 8 * -(-(width + 8) // 8)


def place_at(
    fs: FeatureStack, target_h: int, target_w: int, offset: tuple[int, int]
) -> FeatureStack:
    """Place ``fs`` at a fixed offset inside a larger canvas.

    Padding is treated as solid obstacle: channel 0 is 1, channel 1 is 0, and
    channel 2 continues the true distance to the translated goal (same scale
    as the source map).
    """
    h, w = fs.height, fs.width
    dr, dc = offset
    if target_h < h or target_w < w:
        raise ValueError(f"target {target_h}x{target_w} smaller than source {h}x{w}")
    if not (0 <= dr <= target_h - h and 0 <= dc <= target_w - w):
        raise ValueError(f"offset {offset} puts the map outside the canvas")

    goal = (fs.goal[0] + dr, fs.goal[1] + dc)
    # source maps were normalized by their own diagonal; keep that scale
    diag = math.hypot(h, w)
    canvas = np.empty((3, target_h, target_w), dtype=np.float64)
    canvas[0] = 1.0
    canvas[1] = 0.0
    canvas[2] = goal_distance(target_h, target_w, goal) / diag
    canvas[:, dr : dr + h, dc : dc + w] = fs.channels
    return FeatureStack(canvas, goal)


def translate_augment(
    fs: FeatureStack, target_h: int, target_w: int, seed
) -> tuple[FeatureStack, tuple[int, int]]:
    """Place ``fs`` at a uniformly random offset inside a larger canvas.

    Returns the new stack and the (row, col) offset so targets and masks can
    be translated identically. ``seed`` may be anything default_rng accepts,
    including an existing Generator.
    """
    h, w = fs.height, fs.width
    if target_h < h or target_w < w:
        raise ValueError(f"target {target_h}x{target_w} smaller than source {h}x{w}")
    rng = np.random.default_rng(seed)
    dr = int(rng.integers(0, target_h - h + 1))
    dc = int(rng.integers(0, target_w - w + 1))
    return place_at(fs, target_h, target_w, (dr, dc)), (dr, dc)
