"""Supervision targets and the imitation training loop.

Targets come from classical planners run on the fly: dense cost-to-go from a
backward Dijkstra sweep, sparse cost-to-go along one optimal path, or sparse
plus a Bellman-refined copy of the network's own prediction. The loop samples
maps, builds targets, translates both onto a larger canvas, and fits the
network with Adam under a masked squared error.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import infer_heuristic
from .grid import Cell, GridMap, build_features, canvas_shape, translate_augment
from .model import HeuristicNet
from .nn import Adam, masked_sq_loss, shift_min
from .search import SearchResult, backward_dijkstra, graph_search

TARGET_KINDS = ("bd", "sparse", "sparse-td")

METRICS_HEADER = "step,loss,eval_mae,wall_ms"


class SamplingError(RuntimeError):
    """No usable start/goal sample found within the attempt budget."""


@dataclass(frozen=True)
class TargetKind:
    """Which supervision variant to generate.

    td_lambda weighs the refinement term and td_steps bounds the Bellman
    backups; both matter only for the sparse-td kind.
    """

    name: str
    td_lambda: float = 0.001
    td_steps: int = 3

    def __post_init__(self):
        if self.name not in TARGET_KINDS:
            raise ValueError(f"kind must be one of {TARGET_KINDS}, got {self.name!r}")
        if self.td_lambda < 0:
            raise ValueError(f"td_lambda must be >= 0, got {self.td_lambda}")
        if self.td_steps < 1:
            raise ValueError(f"td_steps must be >= 1, got {self.td_steps}")

    @classmethod
    def parse(cls, text: str, **overrides) -> "TargetKind":
        return cls(text.strip().lower().replace("_", "-"), **overrides)


@dataclass(frozen=True)
class TrainingTargets:
    """Per-map supervision: values under mask, refinement region, free cells.

    td_mask is exactly the free cells the value mask misses, so the two loss
    terms never overlap and neither touches obstacles.
    """

    values: np.ndarray
    mask: np.ndarray
    td_mask: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        shape = self.values.shape
        for name in ("mask", "td_mask", "valid"):
            arr = getattr(self, name)
            if arr.shape != shape or arr.dtype != np.bool_:
                raise ValueError(f"{name} must be bool with shape {shape}")
        if (self.mask & ~self.valid).any():
            raise ValueError("mask covers invalid cells")
        if (self.td_mask != (self.valid & ~self.mask)).any():
            raise ValueError("td_mask must be exactly the unmasked valid cells")
        if not np.isfinite(self.values[self.mask]).all():
            raise ValueError("values must be finite on the mask")


def targets_bd(grid: GridMap, goal: Cell) -> TrainingTargets:
    """Dense cost-to-go targets from a backward Dijkstra sweep; the mask keeps
    every cell the sweep reached (occupied and sealed-off areas drop out)."""
    ctg = backward_dijkstra(grid, goal)
    valid = ~grid.occupancy
    mask = ctg.valid
    return TrainingTargets(ctg.values, mask, valid & ~mask, valid)


def sample_pair(grid: GridMap, rng, attempts: int = 100) -> tuple[Cell, Cell, SearchResult]:
    """Uniform start/goal over free cells, redrawn until a path exists."""
    free = np.flatnonzero(~grid.occupancy.ravel())
    if len(free) < 2:
        raise SamplingError("map has fewer than two free cells")
    w = grid.width
    for _ in range(attempts):
        a = int(free[rng.integers(len(free))])
        b = int(free[rng.integers(len(free))])
        if a == b:
            continue
        start, goal = divmod(a, w), divmod(b, w)
        res = graph_search(grid, start, goal, "astar", "euclid")
        if res.found:
            return start, goal, res
    raise SamplingError(f"no connected start/goal pair in {attempts} draws")


def targets_sparse(grid: GridMap, seed) -> tuple[TrainingTargets, Cell, Cell]:
    """Cost-to-go supervision on the cells of one optimal path.

    Values are suffix costs along the path (0 at the goal); since the path is
    optimal, they equal the true cost-to-go on those cells.
    """
    rng = np.random.default_rng(seed)
    start, goal, res = sample_pair(grid, rng)
    values = np.full((grid.height, grid.width), np.inf)
    mask = np.zeros(values.shape, dtype=bool)
    values[goal] = 0.0
    mask[goal] = True
    suffix = 0.0
    for k in range(len(res.path) - 2, -1, -1):
        (r0, c0), (r1, c1) = res.path[k], res.path[k + 1]
        suffix += math.sqrt(2.0) if (r0 != r1 and c0 != c1) else 1.0
        values[r0, c0] = suffix
        mask[r0, c0] = True
    valid = ~grid.occupancy
    return TrainingTargets(values, mask, valid & ~mask, valid), start, goal


def td_refine(pred: np.ndarray, grid: GridMap, goal: Cell, steps: int = 3) -> np.ndarray:
    """Bellman min-over-successors backups applied to a predicted field.

    Before every backup the goal is clamped to 0 and occupied cells to +inf;
    the final field is clamped the same way so the exact cost-to-go is a
    fixed point on every free cell, goal included.
    """
    if pred.shape != (grid.height, grid.width):
        raise ValueError(f"prediction shape {pred.shape} != map shape")
    h = np.array(pred, dtype=np.float64)
    occ = grid.occupancy
    for _ in range(steps):
        h[occ] = np.inf
        h[goal] = 0.0
        h = shift_min(h)
    h[occ] = np.inf
    h[goal] = 0.0
    return h


def loss(
    pred: np.ndarray,
    targets: TrainingTargets,
    kind: TargetKind,
    h_tilde: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Masked squared error against the targets, plus for the sparse-td kind
    a weighted squared error against the refined field over td_mask.

    h_tilde enters as a constant: no gradient flows through the refinement.
    Non-finite refined values (cells no backup ever reached from a finite
    neighborhood) are excluded from the second term.
    """
    if kind.name == "sparse-td":
        if h_tilde is None:
            raise ValueError("sparse-td loss needs the refined field")
    elif h_tilde is not None:
        raise ValueError(f"refined field given for kind {kind.name!r}")

    total, grad = masked_sq_loss(pred, targets.values, targets.mask)
    if kind.name == "sparse-td":
        td_mask = targets.td_mask & np.isfinite(h_tilde)
        td_total, td_grad = masked_sq_loss(pred, h_tilde, td_mask)
        total = total + kind.td_lambda * td_total
        grad = grad + kind.td_lambda * td_grad
    return total, grad


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    steps: int = 2000
    canvas: tuple[int, int] | None = None
    eval_every: int = 100
    seed: int = 0
    timing: bool = False

    def __post_init__(self):
        if self.batch_size < 1 or self.steps < 1 or self.eval_every < 1:
            raise ValueError("batch_size, steps, and eval_every must be >= 1")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0 < b < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {b}")
        if self.canvas is not None:
            ch, cw = self.canvas
            if ch < 8 or cw < 8 or ch % 8 or cw % 8:
                raise ValueError(f"canvas dims must be positive multiples of 8, got {self.canvas}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        """Load overrides from a JSON file whose keys mirror the fields."""
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "canvas" in raw and raw["canvas"] is not None:
            raw["canvas"] = tuple(raw["canvas"])
        return cls(**raw)


@dataclass(frozen=True)
class TrainResult:
    net: HeuristicNet
    metrics: list[dict]
    skipped: int


def _place_targets(
    t: TrainingTargets, ch: int, cw: int, offset: tuple[int, int]
) -> tuple[TrainingTargets, np.ndarray]:
    """Targets translated onto the canvas; padding is obstacle, so both masks
    are zero there. Also returns the canvas occupancy for Bellman backups."""
    h, w = t.values.shape
    dr, dc = offset
    values = np.full((ch, cw), np.inf)
    mask = np.zeros((ch, cw), dtype=bool)
    valid = np.zeros((ch, cw), dtype=bool)
    values[dr : dr + h, dc : dc + w] = t.values
    mask[dr : dr + h, dc : dc + w] = t.mask
    valid[dr : dr + h, dc : dc + w] = t.valid
    return TrainingTargets(values, mask, valid & ~mask, valid), ~valid


def _sample_item(grids: list[GridMap], kind: TargetKind, rng):
    """One map with fresh targets. Raises SamplingError when the drawn map
    yields no usable sample; the caller redraws and counts the skip."""
    grid = grids[int(rng.integers(len(grids)))]
    if kind.name == "bd":
        free = np.flatnonzero(~grid.occupancy.ravel())
        if len(free) == 0:
            raise SamplingError("map has no free cell for a goal")
        goal = divmod(int(free[rng.integers(len(free))]), grid.width)
        return grid, goal, targets_bd(grid, goal)
    targets, _, goal = targets_sparse(grid, rng)
    return grid, goal, targets


def train(
    dataset,
    kind: TargetKind,
    cfg: TrainConfig,
    eval_maps=None,
    net: HeuristicNet | None = None,
) -> TrainResult:
    """Fit the network on planner-generated targets sampled on the fly.

    dataset: GridMaps or (GridMap, meta) pairs. One step samples batch_size
    maps with replacement, builds targets, translates features and targets by
    the same random offset onto the canvas, and applies one Adam update to
    the summed masked loss. eval_maps, when given, adds a mean-absolute-error
    column every eval_every steps. Deterministic for a fixed seed.
    """
    grids = [item if isinstance(item, GridMap) else item[0] for item in dataset]
    if not grids:
        raise ValueError("empty training dataset")
    if cfg.canvas is None:
        ch, cw = canvas_shape(max(g.height for g in grids), max(g.width for g in grids))
    else:
        ch, cw = cfg.canvas
    for g in grids:
        if g.height > ch or g.width > cw:
            raise ValueError(f"canvas {ch}x{cw} smaller than a {g.height}x{g.width} map")

    rng = np.random.default_rng(cfg.seed)
    if net is None:
        net = HeuristicNet.build(seed=int(rng.integers(2**31)))
    adam = Adam(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
    metrics: list[dict] = []
    skipped = 0

    for step in range(1, cfg.steps + 1):
        t0 = time.perf_counter() if cfg.timing else 0.0
        items = []
        failures_in_a_row = 0
        while len(items) < cfg.batch_size:
            try:
                grid, goal, targets = _sample_item(grids, kind, rng)
            except SamplingError:
                skipped += 1
                failures_in_a_row += 1
                if failures_in_a_row > max(100, 10 * len(grids)):
                    raise
                continue
            failures_in_a_row = 0
            fs, offset = translate_augment(build_features(grid, goal), ch, cw, rng)
            placed, canvas_occ = _place_targets(targets, ch, cw, offset)
            canvas_goal = (goal[0] + offset[0], goal[1] + offset[1])
            items.append((fs.channels, placed, canvas_occ, canvas_goal))

        x = np.stack([it[0] for it in items])
        out, caches = net.forward_train(x)
        dout = np.zeros_like(out)
        step_loss = []
        for i, (_, placed, canvas_occ, canvas_goal) in enumerate(items):
            pred = out[i, 0]
            if kind.name == "sparse-td":
                h_tilde = td_refine(pred, GridMap(canvas_occ), canvas_goal, kind.td_steps)
                val, grad = loss(pred, placed, kind, h_tilde)
            else:
                val, grad = loss(pred, placed, kind)
            dout[i, 0] = grad
            step_loss.append(val)
        grads, _ = net.backward(caches, dout)
        adam.step(net.trainable(), grads)

        row = {"step": step, "loss": math.fsum(step_loss), "eval_mae": None, "wall_ms": None}
        if eval_maps is not None and step % cfg.eval_every == 0:
            row["eval_mae"] = eval_mae(net, eval_maps)
        if cfg.timing:
            row["wall_ms"] = (time.perf_counter() - t0) * 1000.0
        metrics.append(row)
    return TrainResult(net=net, metrics=metrics, skipped=skipped)


def eval_mae(net: HeuristicNet, maps, goals=None) -> float:
    """Mean absolute error of the predicted field against exact cost-to-go,
    over the cells a backward sweep reaches, averaged across maps.

    Uses eval-mode inference on the untranslated maps; goals default to the
    bottom-right corner.
    """
    grids = [m if isinstance(m, GridMap) else m[0] for m in maps]
    if not grids:
        raise ValueError("empty evaluation set")
    if goals is None:
        goals = [(g.height - 1, g.width - 1) for g in grids]
    maes = []
    for grid, goal in zip(grids, goals):
        t = targets_bd(grid, goal)
        pred = infer_heuristic(net, grid, goal)
        err = np.abs(pred[t.mask] - t.values[t.mask])
        maes.append(math.fsum(err) / err.size)
    return math.fsum(maes) / len(maes)


def eval_mae_by_kind(net: HeuristicNet, dataset) -> dict[str, float]:
    """eval_mae grouped by the environment kind attached to each map."""
    groups: dict[str, list[GridMap]] = {}
    for item in dataset:
        if isinstance(item, GridMap):
            groups.setdefault("all", []).append(item)
        else:
            grid, meta = item
            kind = meta["kind"] if isinstance(meta, dict) else str(meta)
            groups.setdefault(kind, []).append(grid)
    return {kind: eval_mae(net, grids) for kind, grids in sorted(groups.items())}


def metrics_to_csv(rows: list[dict]) -> str:
    lines = [METRICS_HEADER]
    for r in rows:
        mae = "" if r["eval_mae"] is None else repr(r["eval_mae"])
        wall = "" if r["wall_ms"] is None else repr(r["wall_ms"])
        lines.append(f"{r['step']},{r['loss']!r},{mae},{wall}")
    return "\n".join(lines) + "\n"


def write_metrics(rows: list[dict], path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(metrics_to_csv(rows))
    tmp.replace(path)


def read_metrics(path) -> list[dict]:
    """Parse a metrics CSV back into row dicts (None for blank cells)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ValueError(f"metrics file must start with {METRICS_HEADER!r}")
    rows = []
    for line in lines[1:]:
        step, lo, mae, wall = line.split(",")
        rows.append(
            {
                "step": int(step),
                "loss": float(lo),
                "eval_mae": float(mae) if mae else None,
                "wall_ms": float(wall) if wall else None,
            }
        )
    return rows
