"""Procedural generation of the seven benchmark environment families.

Every generator is a pure function of (kind, size, seed): the same arguments
always produce the same map. All generators leave the four corner cells free
so corner-to-corner planning problems are well posed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class EnvironmentKind(enum.Enum):
    SHIFTING_GAP = "shifting_gap"
    FOREST = "forest"
    BUGTRAP_FOREST = "bugtrap_forest"
    GAPS_FOREST = "gaps_forest"
    SINGLE_BUGTRAP = "single_bugtrap"
    MAZES = "mazes"
    MULTIPLE_BUGTRAPS = "multiple_bugtraps"

    @classmethod
    def parse(cls, name: str) -> "EnvironmentKind":
        try:
            return cls(name.strip().lower().replace("-", "_"))
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown environment kind {name!r}; expected one of: {valid}") from None


@dataclass(frozen=True)
class GenParams:
    """Tunable knobs for the map generators, with validated ranges.

    forest_density: target obstacle fraction is drawn uniformly from this
        interval; the realized density lands within [5%, 30%] of the cells.
    blob_side: side lengths of the random rectangles scattered as forest.
    gap_width: thickness range (columns) of the shifting-gap wall band.
    gap_opening: height range (rows) of the single opening in the wall.
    trap_thickness: wall thickness range of bugtrap rings.
    corridor_width: maze corridor and door width.
    """

    forest_density: tuple[float, float] = (0.08, 0.22)
    blob_side: tuple[int, int] = (1, 4)
    gap_width: tuple[int, int] = (1, 3)
    gap_opening: tuple[int, int] = (2, 4)
    trap_thickness: tuple[int, int] = (1, 2)
    corridor_width: int = 2

    def __post_init__(self):
        lo, hi = self.forest_density
        if not (0.0 < lo <= hi < 0.3):
            raise ValueError(f"forest_density must lie inside (0, 0.3), got {self.forest_density}")
        for name in ("blob_side", "gap_width", "gap_opening", "trap_thickness"):
            lo, hi = getattr(self, name)
            if not (1 <= lo <= hi):
                raise ValueError(f"{name} must satisfy 1 <= lo <= hi, got {(lo, hi)}")
        if self.corridor_width < 1:
            raise ValueError("corridor_width must be >= 1")


DEFAULT_PARAMS = GenParams()

MIN_SIZE = 16


def _randint(rng, lo: int, hi: int) -> int:
    """Inclusive uniform integer."""
    return int(rng.integers(lo, hi + 1))


def _shifting_gap(h: int, w: int, rng, p: GenParams) -> np.ndarray:
    occ = np.zeros((h, w), dtype=bool)
    thickness = _randint(rng, *p.gap_width)
    # keep the band in the central section, away from the corner columns
    col = _randint(rng, w // 2 - w // 8, w // 2 + w // 8 - thickness + 1)
    opening = min(_randint(rng, *p.gap_opening), max(1, h // 3))
    # the opening hides in the top third of the wall, above every row where
    # the corner-to-corner diagonal can cross the central band, so distance
    # heuristics that ignore the wall dive into the blocked lower region
    top = _randint(rng, 0, max(0, h // 3 - opening))
    occ[:, col : col + thickness] = True
    occ[top : top + opening, col : col + thickness] = False
    return occ


def _scatter_forest(occ: np.ndarray, rng, p: GenParams, density: float) -> None:
    """Stamp random rectangles until the occupied fraction reaches ``density``."""
    h, w = occ.shape
    target = density * occ.size
    while occ.sum() < target:
        bh = _randint(rng, *p.blob_side)
        bw = _randint(rng, *p.blob_side)
        r = _randint(rng, 0, h - 1)
        c = _randint(rng, 0, w - 1)
        occ[r : r + bh, c : c + bw] = True


def _forest(h: int, w: int, rng, p: GenParams) -> np.ndarray:
    occ = np.zeros((h, w), dtype=bool)
    density = rng.uniform(*p.forest_density)
    _scatter_forest(occ, rng, p, density)
    return occ


def _stamp_bugtrap(occ: np.ndarray, rng, p: GenParams, size_lo: float, size_hi: float) -> None:
    """Stamp one C-shaped trap: a rectangular ring with an opening on one side."""
    h, w = occ.shape
    sh = _randint(rng, max(6, int(h * size_lo)), max(7, int(h * size_hi)))
    sw = _randint(rng, max(6, int(w * size_lo)), max(7, int(w * size_hi)))
    sh, sw = min(sh, h - 4), min(sw, w - 4)
    # thickness bounded so both the interior and the opening slot stay nonempty
    side_min = min(sh, sw)
    t_max = min((side_min - 2) // 2, (side_min - max(2, side_min // 3)) // 2)
    t = max(1, min(_randint(rng, *p.trap_thickness), t_max))
    top = _randint(rng, 2, h - sh - 2)
    left = _randint(rng, 2, w - sw - 2)

    occ[top : top + sh, left : left + sw] = True
    occ[top + t : top + sh - t, left + t : left + sw - t] = False

    side = _randint(rng, 0, 3)  # 0=N 1=S 2=W 3=E
    if side in (0, 1):
        opening = max(2, sw // 3)
        c0 = left + _randint(rng, t, sw - t - opening)
        rows = slice(top, top + t) if side == 0 else slice(top + sh - t, top + sh)
        occ[rows, c0 : c0 + opening] = False
    else:
        opening = max(2, sh // 3)
        r0 = top + _randint(rng, t, sh - t - opening)
        cols = slice(left, left + t) if side == 2 else slice(left + sw - t, left + sw)
        occ[r0 : r0 + opening, cols] = False


def _single_bugtrap(h: int, w: int, rng, p: GenParams) -> np.ndarray:
    occ = np.zeros((h, w), dtype=bool)
    _stamp_bugtrap(occ, rng, p, 0.3, 0.5)
    return occ


def _multiple_bugtraps(h: int, w: int, rng, p: GenParams) -> np.ndarray:
    occ = np.zeros((h, w), dtype=bool)
    for _ in range(_randint(rng, 2, 4)):
        _stamp_bugtrap(occ, rng, p, 0.2, 0.35)
    return occ


def _bugtrap_forest(h: int, w: int, rng, p: GenParams) -> np.ndarray:
    occ = np.zeros((h, w), dtype=bool)
    density = rng.uniform(p.forest_density[0] / 2, p.forest_density[1] / 2)
    _scatter_forest(occ, rng, p, density)
    _stamp_bugtrap(occ, rng, p, 0.3, 0.5)
    return occ


def _gaps_forest(h: int, w: int, rng, p: GenParams) -> np.ndarray:
    occ = np.zeros((h, w), dtype=bool)
    density = rng.uniform(p.forest_density[0] / 2, p.forest_density[1] / 2)
    _scatter_forest(occ, rng, p, density)

    thickness = _randint(rng, *p.gap_width)
    col = _randint(rng, w // 2 - w // 8, w // 2 + w // 8 - thickness + 1)
    opening = _randint(rng, *p.gap_opening)
    top = _randint(rng, 0, h - opening)
    occ[:, col : col + thickness] = True
    # carve the opening plus one clear column on each side so the forest
    # cannot seal the mouth of the gap
    occ[top : top + opening, max(0, col - 1) : min(w, col + thickness + 1)] = False
    return occ


def _mazes(h: int, w: int, rng, p: GenParams) -> np.ndarray:
    occ = np.zeros((h, w), dtype=bool)
    cw = p.corridor_width

    def divide(top: int, bottom: int, left: int, right: int) -> None:
        height = bottom - top + 1
        width = right - left + 1
        if height < 2 * cw + 1 and width < 2 * cw + 1:
            return
        if height >= width:
            wall = _randint(rng, top + cw, bottom - cw)
            door = _randint(rng, left, right - cw + 1)
            occ[wall, left : right + 1] = True
            occ[wall, door : door + cw] = False
            divide(top, wall - 1, left, right)
            divide(wall + 1, bottom, left, right)
        else:
            wall = _randint(rng, left + cw, right - cw)
            door = _randint(rng, top, bottom - cw + 1)
            occ[top : bottom + 1, wall] = True
            occ[door : door + cw, wall] = False
            divide(top, bottom, left, wall - 1)
            divide(top, bottom, wall + 1, right)

    divide(0, h - 1, 0, w - 1)
    return occ


_BUILDERS = {
    EnvironmentKind.SHIFTING_GAP: _shifting_gap,
    EnvironmentKind.FOREST: _forest,
    EnvironmentKind.BUGTRAP_FOREST: _bugtrap_forest,
    EnvironmentKind.GAPS_FOREST: _gaps_forest,
    EnvironmentKind.SINGLE_BUGTRAP: _single_bugtrap,
    EnvironmentKind.MAZES: _mazes,
    EnvironmentKind.MULTIPLE_BUGTRAPS: _multiple_bugtraps,
}


def generate(kind: EnvironmentKind, height: int, width: int, seed: int, params: GenParams | None = None):
    """Generate one occupancy map of the given family.

    Deterministic for fixed (kind, height, width, seed). The four corner
    cells are always left free. Sizes below 16 are rejected: the trap
    structures do not fit.
    """
    from .grid import GridMap

    if height < MIN_SIZE or width < MIN_SIZE:
        raise ValueError(f"map size {height}x{width} too small; minimum is {MIN_SIZE}x{MIN_SIZE}")
    if params is None:
        params = DEFAULT_PARAMS
    kind_index = list(EnvironmentKind).index(kind)
    rng = np.random.default_rng([kind_index, height, width, seed])
    occ = _BUILDERS[kind](height, width, rng, params)
    for corner in ((0, 0), (0, width - 1), (height - 1, 0), (height - 1, width - 1)):
        occ[corner] = False
    return GridMap(occ)
