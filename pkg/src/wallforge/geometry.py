"""Axis-aligned 2D geometry in integer millimeters.

All plan coordinates are integer mm. Integer arithmetic keeps snapping and
merging exact, so round-trip tests can compare with ==.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple


@dataclass(frozen=True, order=True)
class Point2:
    """A point in plan space, millimeters."""

    x: int
    y: int

    def translated(self, dx: int, dy: int) -> "Point2":
        return Point2(self.x + dx, self.y + dy)


@dataclass(frozen=True, order=True)
class AxisRect:
    """Axis-aligned rectangle with min < max on both axes."""

    min: Point2
    max: Point2

    def __post_init__(self):
        if not (self.min.x < self.max.x and self.min.y < self.max.y):
            raise ValueError(f"degenerate rect {self.min}..{self.max}")

    @staticmethod
    def of(x0: int, y0: int, x1: int, y1: int) -> "AxisRect":
        return AxisRect(Point2(min(x0, x1), min(y0, y1)), Point2(max(x0, x1), max(y0, y1)))

    @property
    def width(self) -> int:
        return self.max.x - self.min.x

    @property
    def height(self) -> int:
        return self.max.y - self.min.y

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def center(self) -> Tuple[float, float]:
        return ((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)

    def translated(self, dx: int, dy: int) -> "AxisRect":
        return AxisRect(self.min.translated(dx, dy), self.max.translated(dx, dy))

    def contains_point(self, x: float, y: float) -> bool:
        """Half-open membership: min <= p < max on both axes."""
        return self.min.x <= x < self.max.x and self.min.y <= y < self.max.y

    def intersects(self, other: "AxisRect") -> bool:
        return rect_overlap_area(self, other) > 0


@dataclass(frozen=True)
class Polyline:
    """Ordered vertex chain; closed polylines implicitly join last to first."""

    vertices: Tuple[Point2, ...]
    closed: bool = False

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise ValueError("polyline needs >= 2 vertices")
        for a, b in zip(self.vertices, self.vertices[1:]):
            if a == b:
                raise ValueError("consecutive duplicate vertices")

    def bounding_box(self) -> AxisRect:
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return AxisRect(Point2(min(xs), min(ys)), Point2(max(xs), max(ys)))

    def translated(self, dx: int, dy: int) -> "Polyline":
        return Polyline(tuple(v.translated(dx, dy) for v in self.vertices), self.closed)


def snap_value(v: float, grid: int) -> int:
    """Nearest integer multiple of ``grid``; ties round toward +inf."""
    if grid <= 0:
        raise ValueError("grid must be positive")
    if isinstance(v, int):
        # exact integer form of floor(v/grid + 1/2)
        return ((2 * v + grid) // (2 * grid)) * grid
    return int(math.floor(v / grid + 0.5)) * grid


def snap_to_grid(p: Point2, grid: int) -> Point2:
    """Snap both coordinates to the grid (ties toward +inf). Idempotent."""
    return Point2(snap_value(p.x, grid), snap_value(p.y, grid))


def rect_overlap_area(a: AxisRect, b: AxisRect) -> int:
    """Intersection area in mm^2; 0 when disjoint. Symmetric."""
    w = min(a.max.x, b.max.x) - max(a.min.x, b.min.x)
    h = min(a.max.y, b.max.y) - max(a.min.y, b.min.y)
    if w <= 0 or h <= 0:
        return 0
    return w * h


def rect_intersection(a: AxisRect, b: AxisRect) -> AxisRect | None:
    """Intersection rect, or None when overlap area is zero."""
    x0, x1 = max(a.min.x, b.min.x), min(a.max.x, b.max.x)
    y0, y1 = max(a.min.y, b.min.y), min(a.max.y, b.max.y)
    if x0 >= x1 or y0 >= y1:
        return None
    return AxisRect(Point2(x0, y0), Point2(x1, y1))


def merge_collinear(rects: Sequence[AxisRect], axis: str, gap_tol: int) -> List[AxisRect]:
    """Merge rects that share a cross-axis band and sit within ``gap_tol`` along ``axis``.

    axis="X" merges along x for rects with identical (min.y, max.y);
    axis="Y" merges along y for rects with identical (min.x, max.x).
    Overlapping rects (negative gap) always merge. Total covered area never
    decreases and no output rect leaves the input's bounding box.
    """
    if gap_tol < 0:
        raise ValueError("gap_tol must be >= 0")
    if axis not in ("X", "Y"):
        raise ValueError("axis must be 'X' or 'Y'")
    if not rects:
        return []

    if axis == "X":
        band = lambda r: (r.min.y, r.max.y)
        lo = lambda r: r.min.x
        hi = lambda r: r.max.x
        make = lambda b, a0, a1: AxisRect(Point2(a0, b[0]), Point2(a1, b[1]))
    else:
        band = lambda r: (r.min.x, r.max.x)
        lo = lambda r: r.min.y
        hi = lambda r: r.max.y
        make = lambda b, a0, a1: AxisRect(Point2(b[0], a0), Point2(b[1], a1))

    by_band: dict = {}
    for r in rects:
        by_band.setdefault(band(r), []).append(r)

    out: List[AxisRect] = []
    for b in sorted(by_band):
        group = sorted(by_band[b], key=lambda r: (lo(r), hi(r)))
        cur_lo, cur_hi = lo(group[0]), hi(group[0])
        for r in group[1:]:
            if lo(r) - cur_hi <= gap_tol:
                cur_hi = max(cur_hi, hi(r))
            else:
                out.append(make(b, cur_lo, cur_hi))
                cur_lo, cur_hi = lo(r), hi(r)
        out.append(make(b, cur_lo, cur_hi))
    return out


def covered_cells(rects: Iterable[AxisRect], cell: int = 1) -> set:
    """Brute-force covered-cell set at the given resolution (test oracle)."""
    cells = set()
    for r in rects:
        for x in range(r.min.x, r.max.x, cell):
            for y in range(r.min.y, r.max.y, cell):
                cells.add((x, y))
    return cells
