"""Command-line surface: dataset generation, training, evaluation, planning,
rendering, and the quick euclid-versus-learned benchmark.

Exit codes: 0 success, 1 usage or I/O error, 2 no path between the requested
endpoints, 3 invalid endpoints (occupied or out of bounds).
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, figures, mapio, training
from .generate import EnvironmentKind, generate
from .grid import GridMap
from .model import HeuristicNet
from .search import InvalidEndpointError, backward_dijkstra, graph_search

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_PATH = 2
EXIT_BAD_ENDPOINT = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; 2 means NoPath here, so
    usage problems are remapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cell(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'row,col', got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in 'row,col', got {text!r}")


def _resolve_jobs(args) -> int:
    if getattr(args, "jobs", None):
        return max(1, args.jobs)
    env = os.environ.get("HEURPLAN_JOBS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"HEURPLAN_JOBS must be an integer, got {env!r}")
    return 1


def _atomic_bytes(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def _heuristic_table(spec: str, grid: GridMap, goal):
    """Resolve a heuristic request for one map: the euclid sentinel passes
    through, 'optimal' becomes the exact cost-to-go field, anything else is
    read as a weights file and run through one inference pass."""
    if spec == "euclid":
        return "euclid"
    if spec == "optimal":
        return backward_dijkstra(grid, goal).values
    net = HeuristicNet.load(spec)
    return evaluation.infer_heuristic(net, grid, goal)


def _heuristic_label(spec: str) -> str:
    if spec == "euclid":
        return "Euclid"
    if spec == "optimal":
        return "Optimal"
    return f"Learned-{Path(spec).stem}"


# ------------------------------------------------------------------ commands


def cmd_gen_data(args) -> int:
    out = Path(args.out)
    if out.exists() and any(out.iterdir()) and not args.force:
        raise ValueError(f"{out} is not empty; pass --force to add to it")
    out.mkdir(parents=True, exist_ok=True)
    kinds = list(EnvironmentKind) if args.kind == "all" else [EnvironmentKind.parse(args.kind)]
    entries = []
    for kind in kinds:
        for i in range(args.count):
            seed = args.seed + i
            grid = generate(kind, args.size, args.size, seed)
            name = f"{kind.value}_{seed:05d}.pgm"
            mapio.write_pgm(grid, out / name)
            entries.append(
                {
                    "path": name,
                    "kind": kind.value,
                    "height": grid.height,
                    "width": grid.width,
                    "seed": seed,
                }
            )
    mapio.write_manifest(entries, out / mapio.MANIFEST_NAME)
    print(f"wrote {len(entries)} maps to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    maps = mapio.load_dataset(args.data)
    eval_maps = mapio.load_dataset(args.eval_data) if args.eval_data else None
    cfg = training.TrainConfig.from_file(args.config) if args.config else training.TrainConfig()
    overrides = {}
    for flag, name in (
        ("steps", "steps"),
        ("batch", "batch_size"),
        ("lr", "lr"),
        ("seed", "seed"),
        ("eval_every", "eval_every"),
    ):
        value = getattr(args, flag)
        if value is not None:
            overrides[name] = value
    if args.timing:
        overrides["timing"] = True
    cfg = dataclasses.replace(cfg, **overrides)

    kind = training.TargetKind.parse(args.target)
    result = training.train(maps, kind, cfg, eval_maps=eval_maps)

    out = Path(args.out)
    tmp = out.with_name(out.name + ".tmp")
    result.net.save(tmp)
    tmp.replace(out)
    metrics_path = Path(args.metrics) if args.metrics else out.with_suffix(".metrics.csv")
    training.write_metrics(result.metrics, metrics_path)
    figures.learning_curve(result.metrics, metrics_path.with_suffix(".png"))

    final = result.metrics[-1]
    print(f"trained {cfg.steps} steps on {len(maps)} maps (target {kind.name}, batch {cfg.batch_size})")
    print(f"final loss {final['loss']:.3f}, skipped samples {result.skipped}")
    print(f"wrote {out}, {metrics_path}, {metrics_path.with_suffix('.png')}")
    return EXIT_OK


def cmd_plan(args) -> int:
    grid = mapio.read_pgm(args.map)
    table = _heuristic_table(args.heuristic, grid, args.goal)
    result = graph_search(grid, args.start, args.goal, args.planner, table)
    print(result.to_json())
    return EXIT_OK if result.found else EXIT_NO_PATH


def cmd_eval(args) -> int:
    dataset = mapio.load_dataset(args.data)
    jobs = _resolve_jobs(args)
    rows = []
    for spec in args.heuristic or ["euclid"]:
        label, _, value = spec.partition("=")
        if not value:
            label, value = _heuristic_label(spec), spec
        heuristic = value if value in ("euclid", "optimal") else HeuristicNet.load(value)
        rows.extend(
            evaluation.evaluate(
                heuristic,
                dataset,
                planner=args.planner,
                label=label,
                timing=args.timing,
                jobs=jobs,
            )
        )
    csv_text = evaluation.rows_to_csv(rows)
    out = Path(args.out)
    _atomic_bytes(out, csv_text.encode("ascii"))
    figures.bench_chart(rows, out.with_suffix(".png"))
    print(csv_text, end="")
    print(f"wrote {out} and {out.with_suffix('.png')}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    dataset = mapio.load_dataset(args.data)
    jobs = _resolve_jobs(args)
    label = args.label or _heuristic_label(args.weights)
    net = HeuristicNet.load(args.weights)
    base = evaluation.evaluate("euclid", dataset, planner=args.planner, label="Euclid", jobs=jobs)
    learned = evaluation.evaluate(net, dataset, planner=args.planner, label=label, jobs=jobs)

    by_kind = {r.kind: r for r in base}
    for row in learned:
        ref = by_kind[row.kind]
        if ref.solved and row.solved and ref.mean_search_cost > 0:
            ratio = f"{row.mean_search_cost / ref.mean_search_cost:.4f}"
        else:
            ratio = "n/a"
        print(
            f"{row.kind}: Euclid {ref.mean_search_cost:.1f} vs {label} "
            f"{row.mean_search_cost:.1f} expansions  ratio {ratio}"
        )

    def _pooled(rows):
        solved = sum(r.solved for r in rows)
        if not solved:
            return math.nan
        return math.fsum(r.mean_search_cost * r.solved for r in rows if r.solved) / solved

    pooled_base, pooled_learned = _pooled(base), _pooled(learned)
    if math.isfinite(pooled_base) and math.isfinite(pooled_learned) and pooled_base > 0:
        print(f"expansion ratio: {pooled_learned / pooled_base:.4f}")
    else:
        print("expansion ratio: n/a")

    if args.out:
        out = Path(args.out)
        _atomic_bytes(out, evaluation.rows_to_csv(base + learned).encode("ascii"))
        figures.bench_chart(base + learned, out.with_suffix(".png"))
        print(f"wrote {out} and {out.with_suffix('.png')}", file=sys.stderr)
    return EXIT_OK


def cmd_render(args) -> int:
    grid = mapio.read_pgm(args.map)
    table = _heuristic_table(args.heuristic, grid, args.goal)
    if isinstance(table, str):  # euclid has no lookup table; build the field
        rr, cc = np.indices((grid.height, grid.width))
        field = np.hypot(rr - args.goal[0], cc - args.goal[1])
    else:
        field = table
    path = None
    if args.start is not None:
        result = graph_search(grid, args.start, args.goal, args.planner, table)
        if not result.found:
            print(f"no path from {args.start} to {args.goal}", file=sys.stderr)
            return EXIT_NO_PATH
        path = result.path
    evaluation.render(grid, field, path, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heurplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[], help="generate a map dataset with a manifest")
    p.add_argument("--kind", default="all", help="environment kind or 'all'")
    p.add_argument("--count", type=int, default=200, help="maps per kind")
    p.add_argument("--size", type=int, default=64, help="square map side length")
    p.add_argument("--seed", type=int, default=0, help="base seed; map i uses seed+i")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true", help="write into a non-empty directory")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="fit the heuristic network on a dataset")
    p.add_argument("--data", required=True, help="training dataset directory")
    p.add_argument("--eval-data", help="held-out dataset for the periodic error column")
    p.add_argument("--target", default="bd", help="bd | sparse | sparse-td")
    p.add_argument("--config", help="JSON file with TrainConfig fields")
    p.add_argument("--steps", type=int, help="optimization steps")
    p.add_argument("--batch", type=int, help="maps per step")
    p.add_argument("--lr", type=float, help="Adam step size")
    p.add_argument("--eval-every", type=int, dest="eval_every", help="steps between eval rows")
    p.add_argument("--seed", type=int, help="training seed")
    p.add_argument("--timing", action="store_true", help="record per-step wall time")
    p.add_argument("--out", required=True, help="weights file to write")
    p.add_argument("--metrics", help="metrics CSV path (default: alongside weights)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plan", help="plan on one map and print the result as JSON")
    p.add_argument("--map", required=True, help="PGM map file")
    p.add_argument("--start", type=_cell, required=True, help="start as 'row,col'")
    p.add_argument("--goal", type=_cell, required=True, help="goal as 'row,col'")
    p.add_argument("--heuristic", default="euclid", help="euclid | optimal | weights file")
    p.add_argument("--planner", default="astar", choices=("greedy", "astar", "dijkstra"))
    p.add_argument("--seed", type=int, default=0, help="unused; planning is deterministic")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("eval", help="benchmark heuristics over a dataset, write CSV + chart")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument(
        "--heuristic",
        action="append",
        default=None,
        help="euclid | optimal | weights file, or LABEL=VALUE; repeatable",
    )
    p.add_argument("--planner", default="greedy", choices=("greedy", "astar", "dijkstra"))
    p.add_argument("--timing", action="store_true", help="add the wall-time column")
    p.add_argument("--jobs", type=int, help="parallel workers (or HEURPLAN_JOBS)")
    p.add_argument("--seed", type=int, default=0, help="unused; evaluation is deterministic")
    p.add_argument("--out", required=True, help="results CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="compare euclid against a learned heuristic")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--weights", required=True, help="learned heuristic weights file")
    p.add_argument("--label", help="row label for the learned heuristic")
    p.add_argument("--planner", default="greedy", choices=("greedy", "astar", "dijkstra"))
    p.add_argument("--jobs", type=int, help="parallel workers (or HEURPLAN_JOBS)")
    p.add_argument("--seed", type=int, default=0, help="unused; benchmark is deterministic")
    p.add_argument("--out", help="optional results CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="render a heuristic field (and optionally a path) as P6")
    p.add_argument("--map", required=True, help="PGM map file")
    p.add_argument("--goal", type=_cell, required=True, help="goal as 'row,col'")
    p.add_argument("--heuristic", default="optimal", help="euclid | optimal | weights file")
    p.add_argument("--start", type=_cell, help="when given, overlay a planned path")
    p.add_argument("--planner", default="astar", choices=("greedy", "astar", "dijkstra"))
    p.add_argument("--seed", type=int, default=0, help="unused; rendering is deterministic")
    p.add_argument("--out", required=True, help="P6 image path")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits for usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except InvalidEndpointError as exc:
        print(f"invalid endpoints: {exc}", file=sys.stderr)
        return EXIT_BAD_ENDPOINT
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
