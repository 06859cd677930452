"""End-to-end command checks: every subcommand, exit codes, determinism of
generated artifacts, and the documented file layouts."""

import hashlib
import json
import os
from pathlib import Path

import numpy as np
import pytest

from heurplan.cli import main
from heurplan.generate import EnvironmentKind, generate
from heurplan.mapio import MANIFEST_NAME, load_dataset, read_manifest, write_pgm
from heurplan.model import HeuristicNet
from heurplan.search import backward_dijkstra


def run(*argv):
    return main(list(argv))


@pytest.fixture()
def dataset(tmp_path):
    out = tmp_path / "maps"
    assert run("gen-data", "--kind", "shifting_gap", "--count", "3", "--size", "16",
               "--seed", "0", "--out", str(out)) == 0
    return out


@pytest.fixture()
def weights(tmp_path, dataset):
    out = tmp_path / "net.bin"
    code = run("train", "--data", str(dataset), "--target", "sparse", "--steps", "2",
               "--batch", "1", "--seed", "1", "--out", str(out))
    assert code == 0
    return out


# ------------------------------------------------------------------ gen-data


def test_gen_data_writes_manifest_and_maps(dataset):
    entries = read_manifest(dataset / MANIFEST_NAME)
    assert len(entries) == 3
    assert [e["seed"] for e in entries] == [0, 1, 2]
    assert all((dataset / e["path"]).is_file() for e in entries)
    pairs = load_dataset(dataset)
    assert pairs[0][0].height == 16


def test_gen_data_all_kinds(tmp_path):
    out = tmp_path / "all"
    assert run("gen-data", "--kind", "all", "--count", "2", "--size", "16",
               "--seed", "5", "--out", str(out)) == 0
    entries = read_manifest(out / MANIFEST_NAME)
    assert len(entries) == 2 * len(EnvironmentKind)
    assert {e["kind"] for e in entries} == {k.value for k in EnvironmentKind}


def test_gen_data_deterministic_manifest_hash(tmp_path):
    digests = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run("gen-data", "--kind", "forest", "--count", "4", "--size", "16",
                   "--seed", "9", "--out", str(out)) == 0
        blob = (out / MANIFEST_NAME).read_bytes()
        for entry in read_manifest(out / MANIFEST_NAME):
            blob += (out / entry["path"]).read_bytes()
        digests.append(hashlib.sha256(blob).hexdigest())
    assert digests[0] == digests[1]


def test_gen_data_refuses_nonempty_dir(tmp_path, capsys):
    out = tmp_path / "maps"
    out.mkdir()
    (out / "stale.txt").write_text("x")
    assert run("gen-data", "--kind", "forest", "--count", "1", "--size", "16",
               "--out", str(out)) == 1
    assert "--force" in capsys.readouterr().err
    assert run("gen-data", "--kind", "forest", "--count", "1", "--size", "16",
               "--out", str(out), "--force") == 0


def test_gen_data_rejects_bad_kind(tmp_path):
    assert run("gen-data", "--kind", "swamp", "--count", "1", "--size", "16",
               "--out", str(tmp_path / "x")) == 1


# --------------------------------------------------------------------- train


def test_train_writes_weights_metrics_figure(tmp_path, dataset):
    out = tmp_path / "model.bin"
    code = run("train", "--data", str(dataset), "--eval-data", str(dataset),
               "--target", "bd", "--steps", "2", "--batch", "1", "--eval-every", "1",
               "--seed", "0", "--out", str(out))
    assert code == 0
    assert out.is_file()
    metrics = out.with_suffix(".metrics.csv")
    assert metrics.is_file()
    assert out.with_suffix(".metrics.png").is_file()
    lines = metrics.read_text().splitlines()
    assert lines[0] == "step,loss,eval_mae,wall_ms"
    assert len(lines) == 3
    assert not list(tmp_path.glob("*.tmp"))
    HeuristicNet.load(out)  # parses as a valid weights file


def test_train_config_file_and_overrides(tmp_path, dataset):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"steps": 1, "batch_size": 1, "seed": 2}))
    out = tmp_path / "m.bin"
    assert run("train", "--data", str(dataset), "--target", "sparse", "--config",
               str(cfg), "--out", str(out)) == 0
    rows = out.with_suffix(".metrics.csv").read_text().splitlines()
    assert len(rows) == 2  # header + 1 step

    assert run("train", "--data", str(dataset), "--target", "sparse", "--config",
               str(cfg), "--steps", "2", "--out", str(out)) == 0
    rows = out.with_suffix(".metrics.csv").read_text().splitlines()
    assert len(rows) == 3  # flag overrode the config file


def test_train_rejects_bad_target(tmp_path, dataset):
    assert run("train", "--data", str(dataset), "--target", "dense", "--steps", "1",
               "--batch", "1", "--out", str(tmp_path / "w.bin")) == 1


def test_train_missing_dataset(tmp_path):
    assert run("train", "--data", str(tmp_path / "nope"), "--target", "bd",
               "--steps", "1", "--out", str(tmp_path / "w.bin")) == 1


def test_train_deterministic_weight_bytes(tmp_path, dataset):
    blobs = []
    for name in ("r1.bin", "r2.bin"):
        out = tmp_path / name
        assert run("train", "--data", str(dataset), "--target", "sparse-td",
                   "--steps", "2", "--batch", "1", "--seed", "7", "--out", str(out)) == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]


# ---------------------------------------------------------------------- plan


def _write_map(tmp_path, occ):
    from heurplan.grid import GridMap

    path = tmp_path / "map.pgm"
    write_pgm(GridMap(occ), path)
    return path


def test_plan_empty_map_diagonal(tmp_path, capsys):
    path = _write_map(tmp_path, np.zeros((5, 5), dtype=bool))
    assert run("plan", "--map", str(path), "--start", "0,0", "--goal", "4,4",
               "--planner", "greedy", "--heuristic", "euclid") == 0
    result = json.loads(capsys.readouterr().out)
    assert result["found"] is True
    assert result["cost"] == pytest.approx(4 * np.sqrt(2.0))


def test_plan_no_path_exit_2(tmp_path, capsys):
    occ = np.zeros((8, 8), dtype=bool)
    occ[4, :] = True
    path = _write_map(tmp_path, occ)
    assert run("plan", "--map", str(path), "--start", "0,0", "--goal", "7,7") == 2
    result = json.loads(capsys.readouterr().out)
    assert result["found"] is False and result["cost"] is None


def test_plan_invalid_endpoints_exit_3(tmp_path, capsys):
    occ = np.zeros((8, 8), dtype=bool)
    occ[3, 3] = True
    path = _write_map(tmp_path, occ)
    assert run("plan", "--map", str(path), "--start", "0,0", "--goal", "3,3") == 3
    assert run("plan", "--map", str(path), "--start", "0,0", "--goal", "99,0") == 3


def test_plan_usage_errors_exit_1(tmp_path, capsys):
    path = _write_map(tmp_path, np.zeros((5, 5), dtype=bool))
    assert run("plan", "--map", str(path), "--start", "zero", "--goal", "4,4") == 1
    assert run("plan", "--map", str(tmp_path / "missing.pgm"), "--start", "0,0",
               "--goal", "4,4") == 1
    bad = tmp_path / "bad.pgm"
    bad.write_text("P5 not ascii")
    assert run("plan", "--map", str(bad), "--start", "0,0", "--goal", "4,4") == 1


def test_plan_astar_equals_dijkstra_cost(tmp_path, capsys):
    g = generate(EnvironmentKind.SHIFTING_GAP, 16, 16, 2)
    path = tmp_path / "m.pgm"
    write_pgm(g, path)
    costs = []
    for planner in ("astar", "dijkstra"):
        assert run("plan", "--map", str(path), "--start", "0,0", "--goal", "15,15",
                   "--planner", planner) == 0
        costs.append(json.loads(capsys.readouterr().out)["cost"])
    assert costs[0] == pytest.approx(costs[1], abs=1e-9)


def test_plan_with_weights_file(tmp_path, weights, capsys):
    g = generate(EnvironmentKind.SHIFTING_GAP, 16, 16, 0)
    path = tmp_path / "m.pgm"
    write_pgm(g, path)
    assert run("plan", "--map", str(path), "--start", "0,0", "--goal", "15,15",
               "--planner", "greedy", "--heuristic", str(weights)) == 0
    assert json.loads(capsys.readouterr().out)["found"] is True


# ----------------------------------------------------------------------- eval


def test_eval_writes_csv_and_chart(tmp_path, dataset, weights, capsys):
    out = tmp_path / "results.csv"
    code = run("eval", "--data", str(dataset), "--heuristic", "euclid",
               "--heuristic", "optimal", "--heuristic", f"Learned-Sparse={weights}",
               "--planner", "greedy", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("kind,heuristic,planner")
    assert len(lines) == 4  # one kind x three heuristics
    assert {l.split(",")[1] for l in lines[1:]} == {"Euclid", "Optimal", "Learned-Sparse"}
    assert out.with_suffix(".png").is_file()
    assert not list(tmp_path.glob("*.tmp"))


def test_eval_deterministic_csv(tmp_path, dataset):
    blobs = []
    for name in ("e1.csv", "e2.csv"):
        out = tmp_path / name
        assert run("eval", "--data", str(dataset), "--heuristic", "euclid",
                   "--planner", "astar", "--out", str(out)) == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]


def test_eval_jobs_env_fallback(tmp_path, dataset, monkeypatch):
    out = tmp_path / "r.csv"
    monkeypatch.setenv("HEURPLAN_JOBS", "2")
    assert run("eval", "--data", str(dataset), "--heuristic", "euclid",
               "--out", str(out)) == 0
    monkeypatch.setenv("HEURPLAN_JOBS", "lots")
    assert run("eval", "--data", str(dataset), "--heuristic", "euclid",
               "--out", str(out)) == 1


# ---------------------------------------------------------------------- bench


def test_bench_prints_expansion_ratio(tmp_path, dataset, weights, capsys):
    out = tmp_path / "bench.csv"
    code = run("bench", "--data", str(dataset), "--weights", str(weights),
               "--label", "Learned-Sparse", "--out", str(out))
    assert code == 0
    printed = capsys.readouterr().out
    assert "expansion ratio:" in printed
    assert "Euclid" in printed and "Learned-Sparse" in printed
    lines = out.read_text().splitlines()
    assert len(lines) == 3  # header + Euclid + Learned rows
    assert out.with_suffix(".png").is_file()


# --------------------------------------------------------------------- render


def test_render_golden_bytes_via_cli(tmp_path, capsys):
    g = generate(EnvironmentKind.SHIFTING_GAP, 16, 16, 0)
    map_path = tmp_path / "m.pgm"
    write_pgm(g, map_path)
    out = tmp_path / "field.ppm"
    code = run("render", "--map", str(map_path), "--goal", "15,15",
               "--heuristic", "optimal", "--start", "0,0", "--planner", "astar",
               "--out", str(out))
    assert code == 0
    golden = Path(__file__).parent / "golden" / "render_16.ppm"
    assert out.read_bytes() == golden.read_bytes()


def test_render_without_start_and_euclid_field(tmp_path):
    g = generate(EnvironmentKind.FOREST, 16, 16, 1)
    map_path = tmp_path / "m.pgm"
    write_pgm(g, map_path)
    out = tmp_path / "f.ppm"
    assert run("render", "--map", str(map_path), "--goal", "15,15",
               "--heuristic", "euclid", "--out", str(out)) == 0
    assert out.read_bytes().startswith(b"P6\n16 16\n255\n")


def test_render_no_path_exit_2(tmp_path):
    occ = np.zeros((8, 8), dtype=bool)
    occ[4, :] = True
    map_path = _write_map(tmp_path, occ)
    out = tmp_path / "f.ppm"
    assert run("render", "--map", str(map_path), "--goal", "7,7",
               "--heuristic", "optimal", "--start", "0,0", "--out", str(out)) == 2
    assert not out.exists()


# ---------------------------------------------------------------- exit codes


def test_unknown_command_exits_1(capsys):
    assert run("transmogrify") == 1
    assert "error" in capsys.readouterr().err


def test_missing_required_flag_exits_1(capsys):
    assert run("gen-data", "--kind", "forest") == 1
    assert "--out" in capsys.readouterr().err


def test_help_exits_0(capsys):
    assert run("--help") == 0
    assert "gen-data" in capsys.readouterr().out
