"""Best-first graph search with pluggable score policies, plus Backward Dijkstra.

Score policies over the 8-connected grid:
    dijkstra: score = cost so far
    astar:    score = cost so far + heuristic
    greedy:   score = heuristic only

The heuristic source is either the Euclidean distance to the goal or a dense
per-cell lookup table (e.g. an exact cost-to-go field or a learned heuristic
map). The open list keeps duplicate entries and skips stale pops; a vertex
leaves the closed set again whenever a strictly cheaper path reaches it.
Ties are broken FIFO by insertion order, so results are fully deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from heapq import heappush, heappop

import numpy as np

from .grid import Cell, GridMap, SQRT2

_KINDS = ("dijkstra", "astar", "greedy")

# (drow, dcol, cost), unrolled in the hot loop below
_STEPS = (
    (-1, 0, 1.0),
    (1, 0, 1.0),
    (0, -1, 1.0),
    (0, 1, 1.0),
    (-1, -1, SQRT2),
    (-1, 1, SQRT2),
    (1, -1, SQRT2),
    (1, 1, SQRT2),
)


class InvalidEndpointError(ValueError):
    """Start or goal cell is occupied or out of bounds."""


@dataclass(frozen=True)
class SearchResult:
    """Outcome of one search: the path, its cost, and the search effort.

    ``expanded`` counts vertices that were popped from the open list and
    actually processed (stale duplicates are skipped and do not count).
    When no path exists, ``found`` is False and the path is empty.
    """

    path: list[Cell]
    path_cost: float
    expanded: int
    found: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "found": self.found,
                "path": [[r, c] for r, c in self.path],
                "cost": self.path_cost if self.found else None,
                "expanded": self.expanded,
            }
        )


@dataclass(frozen=True)
class CostToGo:
    """Dense cost-to-go field: exact shortest-path cost to the goal.

    ``values`` holds +inf and ``valid`` False on cells the backward search
    never reached (occupied cells, sealed regions).
    """

    values: np.ndarray
    valid: np.ndarray


def euclidean_h(v: Cell, goal: Cell) -> float:
    """Straight-line distance in cells; admissible for unit/sqrt(2) step costs."""
    return math.hypot(v[0] - goal[0], v[1] - goal[1])


def path_quality(path: list[Cell]) -> float:
    """Accumulated move distance along a path (1 per orthogonal, sqrt(2) per diagonal step)."""
    if not path:
        raise ValueError("empty path")
    costs = []
    for (r0, c0), (r1, c1) in zip(path, path[1:]):
        dr, dc = abs(r1 - r0), abs(c1 - c0)
        if max(dr, dc) != 1:
            raise ValueError(f"cells {(r0, c0)} and {(r1, c1)} are not 8-neighbors")
        costs.append(SQRT2 if dr + dc == 2 else 1.0)
    return math.fsum(costs)


def _check_endpoint(grid: GridMap, cell: Cell, name: str) -> None:
    if not grid.in_bounds(cell):
        raise InvalidEndpointError(f"{name} {cell} outside {grid.height}x{grid.width} map")
    if grid.occupancy[cell]:
        raise InvalidEndpointError(f"{name} {cell} is occupied")


def graph_search(
    grid: GridMap,
    start: Cell,
    goal: Cell,
    kind: str = "astar",
    heuristic="euclid",
) -> SearchResult:
    """Best-first search from ``start`` to ``goal`` under the chosen score policy.

    heuristic: "euclid" for the straight-line distance to ``goal``, or a
    (H, W) float array used as a lookup table. Ignored for kind="dijkstra".
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown search kind {kind!r}; expected one of {_KINDS}")
    _check_endpoint(grid, start, "start")
    _check_endpoint(grid, goal, "goal")

    h, w = grid.height, grid.width
    occ = grid.occupancy.astype(np.uint8).tobytes()  # flat bytes: fast scalar reads
    table = None
    if kind != "dijkstra" and not isinstance(heuristic, str):
        table = np.asarray(heuristic, dtype=np.float64)
        if table.shape != (h, w):
            raise ValueError(f"heuristic table shape {table.shape} != map shape {(h, w)}")
        table = table.ravel().tolist()
    elif kind != "dijkstra" and heuristic != "euclid":
        raise ValueError(f"unknown heuristic {heuristic!r}; expected 'euclid' or a lookup table")

    gr, gc = goal
    n = h * w
    g = [math.inf] * n
    parent = [-1] * n
    closed = bytearray(n)
    is_astar = kind == "astar"
    is_dijkstra = kind == "dijkstra"

    start_i = start[0] * w + start[1]
    goal_i = gr * w + gc
    g[start_i] = 0.0
    if is_dijkstra:
        s0 = 0.0
    else:
        # start score: g is 0, so astar and greedy both reduce to the heuristic
        s0 = math.hypot(start[0] - gr, start[1] - gc) if table is None else table[start_i]
    heap = [(s0, 0, start[0], start[1])]
    seq = 1
    expanded = 0
    found = False

    while heap:
        _, _, r, c = heappop(heap)
        i = r * w + c
        if closed[i]:
            continue
        closed[i] = 1
        expanded += 1
        if i == goal_i:
            found = True
            break
        gi = g[i]
        for dr, dc, cost in _STEPS:
            nr = r + dr
            nc = c + dc
            if nr < 0 or nr >= h or nc < 0 or nc >= w:
                continue
            ni = nr * w + nc
            if occ[ni]:
                continue
            ng = gi + cost
            if ng >= g[ni]:
                continue
            g[ni] = ng
            parent[ni] = i
            if is_dijkstra:
                score = ng
            else:
                hv = math.hypot(nr - gr, nc - gc) if table is None else table[ni]
                score = ng + hv if is_astar else hv
            heappush(heap, (score, seq, nr, nc))
            seq += 1
            closed[ni] = 0  # strictly cheaper path: reopen

    if not found:
        return SearchResult(path=[], path_cost=0.0, expanded=expanded, found=False)

    rev = []
    i = goal_i
    while i != -1:
        rev.append((i // w, i % w))
        i = parent[i]
    path = rev[::-1]
    # sum the reconstructed path's own edges: under greedy scoring the stored
    # g value can lag behind a later improvement along the parent chain
    cost = path_quality(path) if len(path) > 1 else 0.0
    return SearchResult(path=path, path_cost=cost, expanded=expanded, found=True)


def backward_dijkstra(grid: GridMap, goal: Cell) -> CostToGo:
    """Exact cost-to-go for every cell reachable from ``goal``.

    Propagates from the goal over free cells until no vertex is left to open;
    unreached and occupied cells carry +inf with valid=False.
    """
    _check_endpoint(grid, goal, "goal")
    h, w = grid.height, grid.width
    occ = grid.occupancy.astype(np.uint8).tobytes()
    n = h * w
    dist = [math.inf] * n
    done = bytearray(n)
    goal_i = goal[0] * w + goal[1]
    dist[goal_i] = 0.0
    heap = [(0.0, 0, goal[0], goal[1])]
    seq = 1
    while heap:
        d, _, r, c = heappop(heap)
        i = r * w + c
        if done[i]:
            continue
        done[i] = 1
        for dr, dc, cost in _STEPS:
            nr = r + dr
            nc = c + dc
            if nr < 0 or nr >= h or nc < 0 or nc >= w:
                continue
            ni = nr * w + nc
            if occ[ni] or done[ni]:
                continue
            nd = d + cost
            if nd < dist[ni]:
                dist[ni] = nd
                heappush(heap, (nd, seq, nr, nc))
                seq += 1
    values = np.array(dist, dtype=np.float64).reshape(h, w)
    return CostToGo(values=values, valid=np.isfinite(values))
