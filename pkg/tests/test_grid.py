"""Grid primitives: move model, distance fields, feature stacks, translation."""

import math

import numpy as np
import pytest

from heurplan.grid import (
    SQRT2,
    Edge,
    GridMap,
    build_features,
    goal_distance,
    is_valid,
    obstacle_distance,
    successors,
    translate_augment,
)

from oracles import brute_obstacle_distance


def empty_grid(h, w):
    return GridMap(np.zeros((h, w), dtype=bool))


def test_gridmap_validation_and_immutability():
    with pytest.raises(ValueError):
        GridMap(np.zeros((4,), dtype=bool))
    g = empty_grid(3, 5)
    assert (g.height, g.width) == (3, 5)
    assert g.diagonal() == pytest.approx(math.hypot(3, 5))
    with pytest.raises(ValueError):
        g.occupancy[0, 0] = True
    assert g.in_bounds((2, 4)) and not g.in_bounds((3, 0)) and not g.in_bounds((0, -1))


def test_successors_interior_cell():
    g = empty_grid(5, 5)
    edges = successors(g, (2, 2))
    assert len(edges) == 8
    assert all(e.src == (2, 2) for e in edges)
    costs = sorted(e.cost for e in edges)
    assert costs == [1.0] * 4 + [SQRT2] * 4
    for e in edges:
        dr, dc = e.dst[0] - 2, e.dst[1] - 2
        assert e.cost == pytest.approx(math.hypot(dr, dc))


def test_successors_corner_and_bounds():
    g = empty_grid(4, 4)
    assert len(successors(g, (0, 0))) == 3
    assert len(successors(g, (0, 2))) == 5
    with pytest.raises(ValueError):
        successors(g, (4, 0))


def test_successors_ignore_occupancy_validity_is_destination_only():
    occ = np.zeros((3, 3), dtype=bool)
    occ[1, 1] = True
    occ[0, 1] = True
    g = GridMap(occ)
    # edges leave even an occupied source; only the destination decides validity
    edges = successors(g, (1, 1))
    assert len(edges) == 8
    assert not is_valid(g, Edge((0, 0), (0, 1), 1.0))
    assert is_valid(g, Edge((1, 1), (1, 0), 1.0))
    assert is_valid(g, Edge((0, 1), (0, 0), 1.0))
    # corner-cutting through diagonal neighbors is allowed
    assert is_valid(g, Edge((0, 0), (1, 0), 1.0))
    assert is_valid(g, Edge((2, 0), (1, 0), 1.0))


def test_obstacle_distance_matches_brute_force():
    rng = np.random.default_rng(123)
    for _ in range(4):
        occ = rng.random((9, 7)) < 0.2
        g = GridMap(occ)
        np.testing.assert_allclose(
            obstacle_distance(g), brute_obstacle_distance(occ), rtol=1e-12, atol=1e-12
        )


def test_obstacle_distance_empty_map_uses_diagonal():
    g = empty_grid(6, 8)
    np.testing.assert_array_equal(obstacle_distance(g), np.full((6, 8), 10.0))


def test_goal_distance_values():
    d = goal_distance(3, 4, (1, 1))
    assert d[1, 1] == 0.0
    assert d[0, 0] == pytest.approx(SQRT2)
    assert d[2, 3] == pytest.approx(math.hypot(1, 2))
    with pytest.raises(ValueError):
        goal_distance(3, 4, (3, 0))


def test_build_features_channels():
    occ = np.zeros((4, 4), dtype=bool)
    occ[2, 2] = True
    g = GridMap(occ)
    fs = build_features(g, (0, 3))
    assert fs.channels.shape == (3, 4, 4)
    assert fs.goal == (0, 3)
    np.testing.assert_array_equal(fs.channels[0], occ.astype(float))
    diag = math.hypot(4, 4)
    assert fs.channels[1, 2, 2] == 0.0
    assert fs.channels[1, 0, 0] == pytest.approx(math.hypot(2, 2) / diag)
    assert fs.channels[2, 0, 3] == 0.0
    assert fs.channels[2, 3, 0] == pytest.approx(math.hypot(3, 3) / diag)
    assert fs.channels[1:].min() >= 0.0 and fs.channels[1:].max() <= 1.0
    with pytest.raises(ValueError):
        build_features(g, (2, 2))
    with pytest.raises(ValueError):
        build_features(g, (9, 0))


def test_translate_augment_places_block_and_pads_with_obstacle():
    occ = np.zeros((4, 4), dtype=bool)
    occ[1, 1] = True
    fs = build_features(GridMap(occ), (3, 3))
    out, (dr, dc) = translate_augment(fs, 8, 8, seed=5)
    assert 0 <= dr <= 4 and 0 <= dc <= 4
    assert out.goal == (3 + dr, 3 + dc)
    np.testing.assert_array_equal(
        out.channels[:, dr : dr + 4, dc : dc + 4], fs.channels
    )
    pad = np.ones((8, 8), dtype=bool)
    pad[dr : dr + 4, dc : dc + 4] = False
    assert (out.channels[0][pad] == 1.0).all()
    assert (out.channels[1][pad] == 0.0).all()
    # goal-distance channel keeps the source map's scale across the canvas
    diag = math.hypot(4, 4)
    rr, cc = np.nonzero(pad)
    want = np.hypot(rr - out.goal[0], cc - out.goal[1]) / diag
    np.testing.assert_allclose(out.channels[2][pad], want, rtol=1e-12)


def test_translate_augment_same_size_is_identity():
    fs = build_features(empty_grid(4, 4), (0, 0))
    out, off = translate_augment(fs, 4, 4, seed=0)
    assert off == (0, 0)
    np.testing.assert_array_equal(out.channels, fs.channels)


def test_translate_augment_offsets_cover_range_and_are_deterministic():
    fs = build_features(empty_grid(4, 4), (1, 2))
    offsets = {translate_augment(fs, 6, 6, seed=s)[1] for s in range(64)}
    assert (0, 0) in offsets and (2, 2) in offsets
    assert translate_augment(fs, 6, 6, seed=9)[1] == translate_augment(fs, 6, 6, seed=9)[1]
    with pytest.raises(ValueError):
        translate_augment(fs, 3, 6, seed=0)
