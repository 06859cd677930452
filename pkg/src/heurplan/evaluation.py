"""Benchmark harness: runs planners with classical or learned heuristics over
map suites, audits every returned path, aggregates per environment kind, and
renders heuristic fields as portable pixmaps.
"""

from __future__ import annotations

import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Cell, GridMap, build_features, canvas_shape, place_at
from .model import HeuristicNet
from .search import backward_dijkstra, graph_search, path_quality

CSV_HEADER = (
    "kind,heuristic,planner,solved,total,success_rate,"
    "mean_search_cost,mean_path_quality,mean_wall_ms"
)


@dataclass(frozen=True)
class BenchRow:
    """Aggregate over the maps of one environment kind.

    Means cover solved instances only; the solved count makes that explicit.
    mean_wall_ms is None when the run was made without timing, which keeps
    result files byte-identical across repeats.
    """

    kind: str
    heuristic: str
    planner: str
    solved: int
    total: int
    success_rate: float
    mean_search_cost: float
    mean_path_quality: float
    mean_wall_ms: float | None


def rows_to_csv(rows: list[BenchRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        wall = "" if r.mean_wall_ms is None else repr(r.mean_wall_ms)
        lines.append(
            f"{r.kind},{r.heuristic},{r.planner},{r.solved},{r.total},"
            f"{r.success_rate!r},{r.mean_search_cost!r},{r.mean_path_quality!r},{wall}"
        )
    return "\n".join(lines) + "\n"


def infer_heuristic(net: HeuristicNet, grid: GridMap, goal: Cell) -> np.ndarray:
    """Heuristic lookup table for every cell from one eval-mode forward pass.

    The map is embedded at offset (0, 0) into the same obstacle-padded
    canvas shape used during training and the prediction cropped back to
    map size. Matching the training border statistics matters: a borderless
    input distorts the field enough to strand greedy searches in spurious
    local minima.
    """
    h, w = grid.height, grid.width
    ph, pw = canvas_shape(h, w)
    fs = place_at(build_features(grid, goal), ph, pw, (0, 0))
    out = net.forward(fs.channels[None], mode="eval")
    return np.ascontiguousarray(out[0, 0, :h, :w])


def audit_path(grid: GridMap, path: list[Cell], start: Cell, goal: Cell) -> None:
    """Validity audit for a found path; raises on any planner contract break."""
    if path[0] != start or path[-1] != goal:
        raise RuntimeError(f"path endpoints {path[0]}..{path[-1]} != {start}..{goal}")
    for cell in path:
        if not grid.is_free(cell):
            raise RuntimeError(f"path crosses obstacle at {cell}")
    path_quality(path)  # raises unless consecutive cells are 8-neighbors


def _median_ms(fn, repeats: int = 3) -> tuple[float, object]:
    """Median wall milliseconds of fn() over repeats, plus its last result."""
    times = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return statistics.median(times), result


def _eval_one(args) -> tuple[bool, int, float, float]:
    """(solved, expanded, path cost, wall ms) for one map; runs in a worker."""
    grid, start, goal, heuristic, planner, timing = args
    if timing:
        wall, res = _median_ms(lambda: graph_search(grid, start, goal, planner, heuristic))
    else:
        wall = 0.0
        res = graph_search(grid, start, goal, planner, heuristic)
    if res.found:
        audit_path(grid, res.path, start, goal)
    return res.found, res.expanded, res.path_cost, wall


def _normalize_dataset(dataset) -> list[tuple[GridMap, str]]:
    items = []
    for item in dataset:
        if isinstance(item, GridMap):
            items.append((item, "all"))
        else:
            grid, meta = item
            kind = meta["kind"] if isinstance(meta, dict) else str(meta)
            items.append((grid, kind))
    if not items:
        raise ValueError("empty evaluation dataset")
    return items


def evaluate(
    heuristic: str | HeuristicNet,
    dataset,
    planner: str = "greedy",
    endpoints: list[tuple[Cell, Cell]] | None = None,
    label: str | None = None,
    timing: bool = False,
    jobs: int = 1,
) -> list[BenchRow]:
    """Run one (heuristic, planner) configuration over a map suite.

    heuristic: "euclid", "optimal" (exact cost-to-go), or a network whose
    prediction is used as a lookup table (one forward pass per map).
    dataset: GridMaps, (GridMap, kind) pairs, or (GridMap, manifest entry)
    pairs as returned by load_dataset. endpoints defaults to corner-to-corner
    (0,0) -> (h-1, w-1). Unsolved maps count as failures; means cover solved
    maps, accumulated with compensated summation so map order is irrelevant.
    """
    items = _normalize_dataset(dataset)
    if endpoints is None:
        endpoints = [((0, 0), (g.height - 1, g.width - 1)) for g, _ in items]
    if len(endpoints) != len(items):
        raise ValueError(f"{len(endpoints)} endpoint pairs for {len(items)} maps")

    if isinstance(heuristic, HeuristicNet):
        name = label or "learned"
    else:
        name = label or heuristic

    tasks = []
    for (grid, _), (start, goal) in zip(items, endpoints):
        if heuristic == "euclid":
            table = "euclid"
        elif heuristic == "optimal":
            table = backward_dijkstra(grid, goal).values
        elif isinstance(heuristic, HeuristicNet):
            table = infer_heuristic(heuristic, grid, goal)
        else:
            raise ValueError(f"unknown heuristic {heuristic!r}")
        tasks.append((grid, start, goal, table, planner, timing))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_eval_one, tasks))
    else:
        results = [_eval_one(t) for t in tasks]

    by_kind: dict[str, list] = {}
    for (grid, kind), outcome in zip(items, results):
        by_kind.setdefault(kind, []).append(outcome)

    rows = []
    for kind in sorted(by_kind):
        outcomes = by_kind[kind]
        solved = [o for o in outcomes if o[0]]
        n_solved, total = len(solved), len(outcomes)
        if n_solved:
            mean_cost = math.fsum(o[1] for o in solved) / n_solved
            mean_quality = math.fsum(o[2] for o in solved) / n_solved
        else:
            mean_cost = mean_quality = math.nan
        wall = math.fsum(o[3] for o in outcomes) / total if timing else None
        rows.append(
            BenchRow(
                kind=kind,
                heuristic=name,
                planner=planner,
                solved=n_solved,
                total=total,
                success_rate=n_solved / total,
                mean_search_cost=mean_cost,
                mean_path_quality=mean_quality,
                mean_wall_ms=wall,
            )
        )
    return rows


_LOW = (0, 0, 255)  # cheapest cells: blue
_HIGH = (255, 255, 0)  # costliest cells: yellow
_PATH = (255, 0, 0)


def render_bytes(grid: GridMap, field: np.ndarray, path: list[Cell] | None = None) -> bytes:
    """P6 pixmap of a heuristic field: blue (low) to yellow (high) gradient,
    obstacles exactly black, optional path overlay in red. Non-finite values
    on free cells draw as the high end. Deterministic for identical inputs."""
    h, w = grid.height, grid.width
    field = np.asarray(field, dtype=np.float64)
    if field.shape != (h, w):
        raise ValueError(f"field shape {field.shape} != map shape {(h, w)}")
    free = ~grid.occupancy
    finite = np.isfinite(field) & free
    if finite.any():
        lo, hi = field[finite].min(), field[finite].max()
    else:
        lo, hi = 0.0, 0.0
    t = np.zeros((h, w))
    if hi > lo:
        t[finite] = (field[finite] - lo) / (hi - lo)
    t[free & ~finite] = 1.0

    img = np.zeros((h, w, 3), dtype=np.uint8)
    for c in range(3):
        chan = _LOW[c] + (_HIGH[c] - _LOW[c]) * t
        img[..., c] = np.where(free, np.rint(chan).astype(np.uint8), 0)
    if path:
        for r, c in path:
            img[r, c] = _PATH
    return b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()


def render(grid: GridMap, field: np.ndarray, path: list[Cell] | None, out) -> None:
    """Write the pixmap via a temp file so readers never see partial output."""
    out = Path(out)
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_bytes(render_bytes(grid, field, path))
    tmp.replace(out)


@dataclass(frozen=True)
class TimingRow:
    heuristic: str
    planner: str
    mean_infer_ms: float
    mean_search_ms: float
    mean_total_ms: float


def timing_report(
    dataset,
    specs: list[tuple[str, str | HeuristicNet, str]],
    repeats: int = 3,
) -> list[TimingRow]:
    """Median-of-repeats wall-time split per (heuristic, planner) request:
    heuristic construction (inference) versus search, averaged over maps."""
    items = _normalize_dataset(dataset)
    rows = []
    for name, heuristic, planner in specs:
        infer_ms = []
        search_ms = []
        for grid, _ in items:
            start, goal = (0, 0), (grid.height - 1, grid.width - 1)
            if heuristic == "euclid":
                table = "euclid"
                infer_ms.append(0.0)
            elif heuristic == "optimal":
                ms, ctg = _median_ms(lambda: backward_dijkstra(grid, goal), repeats)
                table = ctg.values
                infer_ms.append(ms)
            else:
                ms, table = _median_ms(lambda: infer_heuristic(heuristic, grid, goal), repeats)
                infer_ms.append(ms)
            ms, _ = _median_ms(lambda: graph_search(grid, start, goal, planner, table), repeats)
            search_ms.append(ms)
        mean_infer = math.fsum(infer_ms) / len(infer_ms)
        mean_search = math.fsum(search_ms) / len(search_ms)
        rows.append(TimingRow(name, planner, mean_infer, mean_search, mean_infer + mean_search))
    return rows
