"""Map file round-trips, malformed-input errors, dataset manifests."""

import numpy as np
import pytest

from heurplan.generate import EnvironmentKind, generate
from heurplan.grid import GridMap
from heurplan.mapio import (
    MANIFEST_NAME,
    load_dataset,
    pgm_bytes,
    read_manifest,
    read_pgm,
    write_manifest,
    write_pgm,
)


def test_pgm_bytes_canonical_form():
    occ = np.array([[0, 1, 0], [1, 0, 1]], dtype=bool)
    assert pgm_bytes(GridMap(occ)) == b"P2\n3 2\n1\n0 1 0\n1 0 1\n"


def test_pgm_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(3):
        g = GridMap(rng.random((11, 17)) < 0.3)
        p = tmp_path / f"m{i}.pgm"
        write_pgm(g, p)
        back = read_pgm(p)
        np.testing.assert_array_equal(back.occupancy, g.occupancy)
        write_pgm(back, tmp_path / "again.pgm")
        assert (tmp_path / "again.pgm").read_bytes() == p.read_bytes()


def test_read_pgm_tolerates_comments_and_whitespace(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_text("P2 # magic\n# a comment line\n 2   2\n1\n0 1\n\n1 0 # trailing\n")
    g = read_pgm(p)
    np.testing.assert_array_equal(g.occupancy, [[False, True], [True, False]])


@pytest.mark.parametrize(
    "body,msg",
    [
        ("P5\n2 2\n1\n0 1 1 0\n", "P2"),
        ("P2\n2 2\n255\n0 1 1 0\n", "maxval"),
        ("P2\n2 2\n1\n0 1 1\n", "pixels"),
        ("P2\n2 2\n1\n0 1 1 2\n", "0 or 1"),
        ("P2\n2\n", "truncated"),
    ],
)
def test_read_pgm_rejects_malformed(tmp_path, body, msg):
    p = tmp_path / "bad.pgm"
    p.write_text(body)
    with pytest.raises(ValueError, match=msg):
        read_pgm(p)


def test_manifest_round_trip_and_stable_key_order(tmp_path):
    entries = [
        {"path": "a.pgm", "kind": "forest", "seed": 1, "height": 16, "width": 16},
        {"width": 32, "height": 32, "seed": 2, "kind": "mazes", "path": "b.pgm"},
    ]
    p = tmp_path / MANIFEST_NAME
    write_manifest(entries, p)
    lines = p.read_text().splitlines()
    assert all(line.index('"height"') < line.index('"kind"') < line.index('"path"') for line in lines)
    assert read_manifest(p) == entries


def test_load_dataset_returns_maps_in_manifest_order(tmp_path):
    entries = []
    for i, kind in enumerate([EnvironmentKind.FOREST, EnvironmentKind.MAZES]):
        g = generate(kind, 16, 16, seed=i)
        name = f"map_{i}.pgm"
        write_pgm(g, tmp_path / name)
        entries.append(
            {"path": name, "kind": kind.value, "seed": i, "height": 16, "width": 16}
        )
    write_manifest(entries, tmp_path / MANIFEST_NAME)
    loaded = load_dataset(tmp_path)
    assert [e["path"] for _, e in loaded] == ["map_0.pgm", "map_1.pgm"]
    np.testing.assert_array_equal(
        loaded[1][0].occupancy, generate(EnvironmentKind.MAZES, 16, 16, seed=1).occupancy
    )


def test_load_dataset_rejects_dimension_mismatch(tmp_path):
    g = generate(EnvironmentKind.FOREST, 16, 16, seed=0)
    write_pgm(g, tmp_path / "m.pgm")
    write_manifest(
        [{"path": "m.pgm", "kind": "forest", "seed": 0, "height": 32, "width": 16}],
        tmp_path / MANIFEST_NAME,
    )
    with pytest.raises(ValueError, match="manifest says"):
        load_dataset(tmp_path)


def test_load_dataset_requires_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path)
