"""Grid path planning with learned search heuristics.

A fully convolutional network predicts per-cell cost-to-go from a map and a
goal; best-first planners consume the prediction as a heuristic lookup table.
Supervision comes from classical planners (backward Dijkstra fields or
optimal-path suffix costs, optionally densified by Bellman backups on the
network's own output).
"""

from .evaluation import BenchRow, evaluate, infer_heuristic, render, timing_report
from .generate import EnvironmentKind, generate
from .grid import FeatureStack, GridMap, build_features
from .mapio import load_dataset, read_pgm, write_pgm
from .model import HeuristicNet, ModelConfig, WeightFormatError
from .search import (
    CostToGo,
    InvalidEndpointError,
    SearchResult,
    backward_dijkstra,
    graph_search,
    path_quality,
)
from .training import (
    SamplingError,
    TargetKind,
    TrainConfig,
    TrainingTargets,
    eval_mae,
    targets_bd,
    targets_sparse,
    td_refine,
    train,
)

__all__ = [
    "BenchRow",
    "CostToGo",
    "EnvironmentKind",
    "FeatureStack",
    "GridMap",
    "HeuristicNet",
    "InvalidEndpointError",
    "ModelConfig",
    "SamplingError",
    "SearchResult",
    "TargetKind",
    "TrainConfig",
    "TrainingTargets",
    "WeightFormatError",
    "backward_dijkstra",
    "build_features",
    "eval_mae",
    "evaluate",
    "generate",
    "graph_search",
    "infer_heuristic",
    "load_dataset",
    "path_quality",
    "read_pgm",
    "render",
    "targets_bd",
    "targets_sparse",
    "td_refine",
    "timing_report",
    "train",
    "write_pgm",
]

__version__ = "0.1.0"
