"""Shared fixtures: hand-authored DXF plans, synthetic layout generators,
and independent oracles (pixel coverage, skeleton length)."""

from __future__ import annotations

import math
import random
from typing import List, Sequence, Tuple

import numpy as np
import pytest
from scipy import ndimage

from wallforge.geometry import AxisRect, Point2, Polyline
from wallforge.plan import FloorPlan, StoryMeta
from wallforge.vectorize import LayoutGraph, WallLimb, rebuild_junctions


def make_dxf(lines=(), polylines=(), layers=()) -> bytes:
    """Author a minimal ASCII DXF from (layer, x0, y0, x1, y1) lines and
    (layer, closed, [(x, y), ...]) polylines."""
    out: List[str] = []

    def put(code, value):
        out.append(str(code))
        out.append(str(value))

    put(0, "SECTION")
    put(2, "TABLES")
    put(0, "TABLE")
    put(2, "LAYER")
    for name in layers:
        put(0, "LAYER")
        put(2, name)
        put(70, 0)
    put(0, "ENDTAB")
    put(0, "ENDSEC")
    put(0, "SECTION")
    put(2, "ENTITIES")
    for layer, x0, y0, x1, y1 in lines:
        put(0, "LINE")
        put(8, layer)
        put(10, x0)
        put(20, y0)
        put(11, x1)
        put(21, y1)
    for layer, closed, pts in polylines:
        put(0, "LWPOLYLINE")
        put(8, layer)
        put(90, len(pts))
        put(70, 1 if closed else 0)
        for x, y in pts:
            put(10, x)
            put(20, y)
    put(0, "ENDSEC")
    put(0, "EOF")
    return ("\n".join(out) + "\n").encode()


@pytest.fixture
def small_dxf() -> bytes:
    """8 orthogonal wall lines on WALL + a closed outline on OUTLINE."""
    lines = [
        ("WALL", 0, 0, 8000, 0),
        ("WALL", 0, 8000, 8000, 8000),
        ("WALL", 0, 0, 0, 8000),
        ("WALL", 8000, 0, 8000, 8000),
        ("WALL", 0, 4000, 8000, 4000),
        ("WALL", 4000, 0, 4000, 8000),
        ("WALL", 0, 2000, 4000, 2000),
        ("WALL", 4000, 6000, 8000, 6000),
    ]
    outline = [("OUTLINE", True, [(0, 0), (8000, 0), (8000, 8000), (0, 8000)])]
    return make_dxf(lines=lines, polylines=outline, layers=("WALL", "OUTLINE"))


@pytest.fixture
def studio_dxf() -> bytes:
    """Perimeter arch walls + two shear walls + outline; used by studio tests."""
    lines = [
        ("WALL", 0, 0, 12000, 0),
        ("WALL", 0, 12000, 12000, 12000),
        ("WALL", 0, 0, 0, 12000),
        ("WALL", 12000, 0, 12000, 12000),
        ("SW", 3000, 3000, 9000, 3000),
        ("SW", 3000, 3000, 3000, 9000),
        ("SW", 9000, 9000, 9000, 3000),
        ("SW", 3000, 9000, 9000, 9000),
    ]
    outline = [("OUTLINE", True, [(0, 0), (12000, 0), (12000, 12000), (0, 12000)])]
    return make_dxf(lines=lines, polylines=outline, layers=("WALL", "SW", "OUTLINE"))


@pytest.fixture
def layer_config_text() -> str:
    return (
        "# firm conventions\n"
        "layers.WALL* = ArchWall\n"
        "layers.SW* = ShearWall\n"
        "layers.OPEN* = Opening\n"
        "layers.OUTLINE = Outline\n"
        "thickness.ArchWall = 200\n"
        "thickness.ShearWall = 200\n"
    )


def simple_plan(shear: bool = True, size: int = 8000) -> FloorPlan:
    """A square plan with perimeter walls and, optionally, four shear walls."""
    s = size
    outline = Polyline((Point2(0, 0), Point2(s, 0), Point2(s, s), Point2(0, s)),
                       closed=True)
    arch = [
        AxisRect.of(0, 0, s, 200),
        AxisRect.of(0, s - 200, s, s),
        AxisRect.of(0, 0, 200, s),
        AxisRect.of(s - 200, 0, s, s),
    ]
    shear_walls = []
    if shear:
        shear_walls = [
            AxisRect.of(s // 4, 0, s // 4 + 2000, 200),
            AxisRect.of(s // 4, s - 200, s // 4 + 2000, s),
            AxisRect.of(0, s // 4, 200, s // 4 + 2000),
            AxisRect.of(s - 200, s // 4, s, s // 4 + 2000),
        ]
    return FloorPlan(outline=outline, arch_walls=arch, openings=[],
                     shear_walls=shear_walls, story_meta=StoryMeta())


def limb(x0: int, y0: int, x1: int, y1: int, t: int = 200,
         component_id: int = 0) -> WallLimb:
    return WallLimb((Point2(x0, y0), Point2(x1, y1)), t, component_id)


def graph_of(limbs: Sequence[WallLimb], scale: int = 100) -> LayoutGraph:
    return LayoutGraph(limbs=list(limbs), junctions=rebuild_junctions(limbs),
                       scale=scale)


def symmetric_graph(span: int = 8000) -> LayoutGraph:
    """Doubly symmetric 4-limb layout about (span/2, span/2)."""
    s = span
    return graph_of([
        limb(s // 4, 100, 3 * s // 4, 100),
        limb(s // 4, s - 100, 3 * s // 4, s - 100),
        limb(100, s // 4, 100, 3 * s // 4),
        limb(s - 100, s // 4, s - 100, 3 * s // 4),
    ])


# --- synthetic layout generator (grid-aligned at the raster scale) ---

def random_wall_limbs(rng: random.Random, canvas: int = 128,
                      scale: int = 100) -> List[WallLimb]:
    """Random axis-aligned layouts that vectorize exactly.

    Endpoints sit on an 8-px lattice with spans >= 24 px and distinct
    cross-axis slots, so decomposition + thickness snapping + gap merging
    reproduce the rasterized pixel set bit for bit.
    """
    slot = 8
    slots = list(range(2, (canvas - 4) // slot - 2))
    n_x = rng.randint(2, 4)
    n_y = rng.randint(2, 4)
    limbs: List[WallLimb] = []
    for axis, count in (("X", n_x), ("Y", n_y)):
        cross_slots = rng.sample(slots, count)
        for cs in cross_slots:
            t_px = rng.choice((2, 3))
            lo_slot = rng.choice(slots[:-4])
            hi_slot = rng.choice([s for s in slots if s - lo_slot >= 3])
            lo = lo_slot * slot * scale
            hi = hi_slot * slot * scale
            cross = cs * slot * scale
            t = t_px * scale
            half = t // 2
            if axis == "X":
                limbs.append(WallLimb((Point2(lo, cross + half),
                                       Point2(hi, cross + half)), t))
            else:
                limbs.append(WallLimb((Point2(cross + half, lo),
                                       Point2(cross + half, hi)), t))
    return limbs


def random_polyomino(rng: random.Random, max_cells: int = 60,
                     width: int = 24, height: int = 24) -> np.ndarray:
    """Random 4-connected rectilinear polyomino mask grown from a seed cell."""
    seed = (rng.randrange(height), rng.randrange(width))
    cells = {seed}
    frontier = [seed]
    target = rng.randint(1, max_cells)
    while len(cells) < target and frontier:
        r, c = frontier[rng.randrange(len(frontier))]
        choices = [(r + dr, c + dc) for dr, dc in ((0, 1), (0, -1), (1, 0), (-1, 0))
                   if 0 <= r + dr < height and 0 <= c + dc < width
                   and (r + dr, c + dc) not in cells]
        if not choices:
            frontier.remove((r, c))
            continue
        new = choices[rng.randrange(len(choices))]
        cells.add(new)
        frontier.append(new)
    mask = np.zeros((height, width), dtype=bool)
    for (r, c) in cells:
        mask[r, c] = True
    return mask


# --- independent oracles ---

def brute_force_cover(rects: Sequence[Tuple[int, int, int, int]]) -> set:
    """All (row, col) cells covered by half-open pixel rects."""
    cells = set()
    for (r0, c0, r1, c1) in rects:
        for r in range(r0, r1):
            for c in range(c0, c1):
                cells.add((r, c))
    return cells


def skeleton_length_mm(rects: Sequence[Tuple[int, int, int, int]],
                       resolution: int = 10) -> float:
    """Morphological-skeleton length of the rect union at the given
    resolution, with a distance-transform correction at free skeleton ends
    (the thinning retracts about half a thickness from every wall end)."""
    from skimage.morphology import skeletonize

    x1 = max(r[2] for r in rects)
    y1 = max(r[3] for r in rects)
    W = x1 // resolution + 4
    H = y1 // resolution + 4
    mask = np.zeros((H, W), bool)
    for (a, b, c, d) in rects:
        mask[b // resolution + 2:d // resolution + 2,
             a // resolution + 2:c // resolution + 2] = True
    skel = skeletonize(mask)
    dt = ndimage.distance_transform_edt(mask)
    ys, xs = np.nonzero(skel)
    pts = set(zip(ys.tolist(), xs.tolist()))
    orth = diag = 0
    for (y, x) in pts:
        if (y, x + 1) in pts:
            orth += 1
        if (y + 1, x) in pts:
            orth += 1
        if (y + 1, x + 1) in pts:
            diag += 1
        if (y + 1, x - 1) in pts:
            diag += 1
    length = (orth + diag * math.sqrt(2)) * resolution

    def degree(y, x):
        return sum((y + dy, x + dx) in pts
                   for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0))

    endpoints = [(y, x) for (y, x) in pts if degree(y, x) == 1]
    length += sum(dt[y, x] for (y, x) in endpoints) * resolution
    return length
