"""Map and dataset file I/O.

Maps are stored as ASCII PGM (P2) with maxval 1 where 1 marks an obstacle.
A dataset directory holds one .pgm per map plus a JSON-lines manifest with
one record per map: path (relative to the manifest), kind, seed, height,
width. Writers are atomic (write to a temp name, then rename).
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .grid import GridMap

MANIFEST_NAME = "manifest.jsonl"


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def pgm_bytes(grid: GridMap) -> bytes:
    """Canonical P2 encoding; bit-identical for identical maps."""
    lines = ["P2", f"{grid.width} {grid.height}", "1"]
    occ = grid.occupancy.astype(np.uint8)
    lines.extend(" ".join(map(str, row)) for row in occ)
    return ("\n".join(lines) + "\n").encode("ascii")


def write_pgm(grid: GridMap, path) -> None:
    _atomic_write(Path(path), pgm_bytes(grid))


def read_pgm(path) -> GridMap:
    """Parse an ASCII PGM obstacle map; 1 = obstacle, 0 = free."""
    raw = Path(path).read_text(encoding="ascii")
    tokens = []
    for line in raw.splitlines():
        body = line.split("#", 1)[0]
        tokens.extend(body.split())
    if not tokens or tokens[0] != "P2":
        raise ValueError(f"{path}: not an ASCII (P2) PGM file")
    if len(tokens) < 4:
        raise ValueError(f"{path}: truncated PGM header")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval != 1:
        raise ValueError(f"{path}: expected maxval 1, got {maxval}")
    values = tokens[4:]
    if len(values) != width * height:
        raise ValueError(f"{path}: expected {width * height} pixels, got {len(values)}")
    occ = np.array([int(v) for v in values], dtype=np.uint8).reshape(height, width)
    if not np.isin(occ, (0, 1)).all():
        raise ValueError(f"{path}: pixel values must be 0 or 1")
    return GridMap(occ.astype(bool))


def write_manifest(entries: list[dict], path) -> None:
    """Write dataset records as JSON lines with stable key order."""
    body = "".join(json.dumps(e, sort_keys=True) + "\n" for e in entries)
    _atomic_write(Path(path), body.encode("utf-8"))


def read_manifest(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def load_dataset(directory) -> list[tuple[GridMap, dict]]:
    """Load every map listed in a dataset directory's manifest, in manifest order."""
    directory = Path(directory)
    manifest = directory / MANIFEST_NAME
    if not manifest.is_file():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {directory}")
    out = []
    for entry in read_manifest(manifest):
        grid = read_pgm(directory / entry["path"])
        if (grid.height, grid.width) != (entry["height"], entry["width"]):
            raise ValueError(
                f"{entry['path']}: manifest says {entry['height']}x{entry['width']}, "
                f"file is {grid.height}x{grid.width}"
            )
        out.append((grid, entry))
    return out
