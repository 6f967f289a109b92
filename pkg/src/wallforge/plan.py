"""Floor-plan model: layer classification, normalization, JSON round trip.

A FloorPlan is the normalized vector form of one story: closed outline,
architectural wall rects, opening rects, and (for training plans) shear wall
rects. Everything is integer millimeters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fnmatch import fnmatchcase
from typing import Dict, List, Optional, Sequence, Tuple

from .dxf import DxfDocument, DxfEntity
from .errors import InvalidGeometry, NoOutline, NonOrthogonalWall
from .geometry import AxisRect, Point2, Polyline, snap_to_grid

NORMALIZE_GRID = 50          # mm
DEFAULT_THICKNESS = 200      # mm, wall inflation when the config does not say
MAX_PLAN_EXTENT = 60_000     # mm per side
ANGLE_TOL_DEG = 1.0

CLASSES = ("ArchWall", "ShearWall", "Opening", "Outline", "Ignore")

PLAN_SCHEMA = "wallforge.plan/1"


@dataclass(frozen=True)
class StoryMeta:
    story_height: int = 3000
    num_stories: int = 1
    seismic_label: str = ""

    def __post_init__(self):
        if not (2400 <= self.story_height <= 6000):
            raise ValueError(f"story_height {self.story_height} outside [2400, 6000]")
        if self.num_stories < 1:
            raise ValueError("num_stories must be >= 1")


@dataclass
class LayerMap:
    """Ordered (pattern -> class) rules; first match wins.

    Patterns are case-sensitive fnmatch globs against layer names.
    """

    entries: List[Tuple[str, str]]
    thickness: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for _, cls in self.entries:
            if cls not in CLASSES:
                raise ValueError(f"unknown class {cls!r}")
        if not any(cls == "ArchWall" for _, cls in self.entries):
            raise ValueError("layer map needs at least one ArchWall pattern")

    def classify(self, layer: str) -> str:
        for pattern, cls in self.entries:
            if fnmatchcase(layer, pattern):
                return cls
        return "Ignore"

    def thickness_for(self, cls: str) -> int:
        return self.thickness.get(cls, DEFAULT_THICKNESS)

    @staticmethod
    def from_config_text(text: str) -> "LayerMap":
        """Parse the documented key-value format:

            layers.<pattern> = <class>
            thickness.<class> = <mm>

        ``#`` starts a comment. Rules keep file order.
        """
        entries: List[Tuple[str, str]] = []
        thickness: Dict[str, int] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key.startswith("layers."):
                entries.append((key[len("layers."):], value))
            elif key.startswith("thickness."):
                thickness[key[len("thickness."):]] = int(value)
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
        return LayerMap(entries, thickness)


@dataclass
class FloorPlan:
    outline: Polyline
    arch_walls: List[AxisRect] = field(default_factory=list)
    openings: List[AxisRect] = field(default_factory=list)
    shear_walls: List[AxisRect] = field(default_factory=list)
    story_meta: StoryMeta = field(default_factory=StoryMeta)

    def validate(self, max_extent: int = MAX_PLAN_EXTENT) -> None:
        """Boundary walls carry their centerline on the outline, so rects may
        protrude up to half their thickness beyond the outline bbox."""
        if not self.outline.closed:
            raise InvalidGeometry("outline must be closed")
        bbox = self.outline.bounding_box()
        if bbox.width > max_extent or bbox.height > max_extent:
            raise InvalidGeometry(
                f"plan extent {bbox.width}x{bbox.height} mm exceeds {max_extent} mm")
        for name, rects in (("arch_walls", self.arch_walls),
                            ("openings", self.openings),
                            ("shear_walls", self.shear_walls)):
            for r in rects:
                margin = min(r.width, r.height) // 2
                if (r.min.x < bbox.min.x - margin or r.min.y < bbox.min.y - margin
                        or r.max.x > bbox.max.x + margin or r.max.y > bbox.max.y + margin):
                    raise InvalidGeometry(f"{name} rect {r} outside outline bbox")

    def extent(self) -> AxisRect:
        """Hull of the outline and every rect (what rasterization centers on)."""
        bbox = self.outline.bounding_box()
        x0, y0, x1, y1 = bbox.min.x, bbox.min.y, bbox.max.x, bbox.max.y
        for r in self.arch_walls + self.openings + self.shear_walls:
            x0, y0 = min(x0, r.min.x), min(y0, r.min.y)
            x1, y1 = max(x1, r.max.x), max(y1, r.max.y)
        return AxisRect(Point2(x0, y0), Point2(x1, y1))

    def translated(self, dx: int, dy: int) -> "FloorPlan":
        return FloorPlan(
            outline=self.outline.translated(dx, dy),
            arch_walls=[r.translated(dx, dy) for r in self.arch_walls],
            openings=[r.translated(dx, dy) for r in self.openings],
            shear_walls=[r.translated(dx, dy) for r in self.shear_walls],
            story_meta=self.story_meta,
        )


def _segment_to_rect(p0: Tuple[float, float], p1: Tuple[float, float],
                     thickness: int, entity_id: int) -> AxisRect:
    """Inflate a centerline segment to an axis-aligned rect of given thickness."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    if dx == 0 and dy == 0:
        raise InvalidGeometry(f"entity {entity_id}: zero-length segment")
    deviation = math.degrees(math.atan2(min(abs(dx), abs(dy)), max(abs(dx), abs(dy))))
    if deviation > ANGLE_TOL_DEG:
        raise NonOrthogonalWall(entity_id)
    half = thickness // 2
    if abs(dx) >= abs(dy):
        y = int(round((p0[1] + p1[1]) / 2))
        x0, x1 = int(round(min(p0[0], p1[0]))), int(round(max(p0[0], p1[0])))
        return AxisRect(Point2(x0, y - half), Point2(x1, y + thickness - half))
    x = int(round((p0[0] + p1[0]) / 2))
    y0, y1 = int(round(min(p0[1], p1[1]))), int(round(max(p0[1], p1[1])))
    return AxisRect(Point2(x - half, y0), Point2(x + thickness - half, y1))


def _closed_polyline(e: DxfEntity) -> Polyline:
    verts = [Point2(int(round(x)), int(round(y))) for x, y in e.points]
    dedup = [verts[0]]
    for v in verts[1:]:
        if v != dedup[-1]:
            dedup.append(v)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    if len(dedup) < 2:
        raise InvalidGeometry(f"entity {e.handle}: degenerate outline")
    return Polyline(tuple(dedup), closed=True)


def apply_layer_map(doc: DxfDocument, layer_map: LayerMap,
                    story_meta: Optional[StoryMeta] = None) -> FloorPlan:
    """Classify entities by layer and build a FloorPlan.

    Wall-class centerlines are inflated to rects with the per-class thickness.
    Closed Opening polylines become their bounding rect. Entities matching no
    pattern are ignored (counted, not an error). Raises NoOutline when no
    closed outline exists and no hull is derivable, NonOrthogonalWall for
    off-axis wall segments.
    """
    walls: Dict[str, List[AxisRect]] = {"ArchWall": [], "ShearWall": [], "Opening": []}
    outline: Optional[Polyline] = None
    ignored = 0

    for e in doc.entities:
        cls = layer_map.classify(e.layer)
        if cls == "Ignore":
            ignored += 1
            continue
        if cls == "Outline":
            if e.kind == "LWPOLYLINE" and e.closed:
                outline = _closed_polyline(e)
            # open geometry on the outline layer contributes to the hull only
            continue
        if e.kind == "LWPOLYLINE" and e.closed and cls == "Opening":
            xs = [int(round(x)) for x, _ in e.points]
            ys = [int(round(y)) for _, y in e.points]
            walls[cls].append(AxisRect(Point2(min(xs), min(ys)), Point2(max(xs), max(ys))))
            continue
        t = layer_map.thickness_for(cls)
        for p0, p1 in zip(e.points, e.points[1:]):
            walls[cls].append(_segment_to_rect(p0, p1, t, e.handle))
        if e.kind == "LWPOLYLINE" and e.closed:
            walls[cls].append(_segment_to_rect(e.points[-1], e.points[0], t, e.handle))

    all_rects = walls["ArchWall"] + walls["ShearWall"] + walls["Opening"]
    if outline is None:
        if not all_rects:
            raise NoOutline("no closed outline and no classified geometry to hull")
        x0 = min(r.min.x for r in all_rects)
        y0 = min(r.min.y for r in all_rects)
        x1 = max(r.max.x for r in all_rects)
        y1 = max(r.max.y for r in all_rects)
        outline = Polyline((Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1)),
                           closed=True)

    plan = FloorPlan(
        outline=outline,
        arch_walls=walls["ArchWall"],
        openings=walls["Opening"],
        shear_walls=walls["ShearWall"],
        story_meta=story_meta or StoryMeta(),
    )
    plan.ignored_entities = ignored  # informational, not part of equality
    plan.validate()
    return plan


def _snap_rect(r: AxisRect, grid: int) -> AxisRect:
    lo = snap_to_grid(r.min, grid)
    hi = snap_to_grid(r.max, grid)
    # snapping may collapse a thin rect; keep at least one grid cell
    if hi.x <= lo.x:
        hi = Point2(lo.x + grid, hi.y)
    if hi.y <= lo.y:
        hi = Point2(hi.x, lo.y + grid)
    return AxisRect(lo, hi)


def normalize_plan(plan: FloorPlan) -> FloorPlan:
    """Translate the outline bbox min to (0, 0) and snap all coords to 50 mm.

    Idempotent: normalizing a normalized plan returns an equal plan.
    """
    bbox = plan.outline.bounding_box()
    moved = plan.translated(-bbox.min.x, -bbox.min.y)
    outline = Polyline(
        tuple(snap_to_grid(v, NORMALIZE_GRID) for v in moved.outline.vertices),
        closed=True,
    )
    return FloorPlan(
        outline=outline,
        arch_walls=[_snap_rect(r, NORMALIZE_GRID) for r in moved.arch_walls],
        openings=[_snap_rect(r, NORMALIZE_GRID) for r in moved.openings],
        shear_walls=[_snap_rect(r, NORMALIZE_GRID) for r in moved.shear_walls],
        story_meta=plan.story_meta,
    )


# --- JSON round trip (documented schema: wallforge.plan/1) ---

def _rects_to_json(rects: Sequence[AxisRect]) -> List[List[int]]:
    return [[r.min.x, r.min.y, r.max.x, r.max.y] for r in rects]


def _rects_from_json(data: Sequence[Sequence[int]]) -> List[AxisRect]:
    return [AxisRect(Point2(x0, y0), Point2(x1, y1)) for x0, y0, x1, y1 in data]


def plan_to_json(plan: FloorPlan) -> str:
    doc = {
        "schema": PLAN_SCHEMA,
        "outline": {
            "closed": plan.outline.closed,
            "vertices": [[v.x, v.y] for v in plan.outline.vertices],
        },
        "arch_walls": _rects_to_json(plan.arch_walls),
        "openings": _rects_to_json(plan.openings),
        "shear_walls": _rects_to_json(plan.shear_walls),
        "story_meta": {
            "story_height": plan.story_meta.story_height,
            "num_stories": plan.story_meta.num_stories,
            "seismic_label": plan.story_meta.seismic_label,
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def plan_from_json(text: str) -> FloorPlan:
    doc = json.loads(text)
    if doc.get("schema") != PLAN_SCHEMA:
        raise InvalidGeometry(f"unexpected plan schema {doc.get('schema')!r}")
    outline = Polyline(
        tuple(Point2(int(x), int(y)) for x, y in doc["outline"]["vertices"]),
        closed=bool(doc["outline"]["closed"]),
    )
    meta = doc["story_meta"]
    return FloorPlan(
        outline=outline,
        arch_walls=_rects_from_json(doc["arch_walls"]),
        openings=_rects_from_json(doc["openings"]),
        shear_walls=_rects_from_json(doc["shear_walls"]),
        story_meta=StoryMeta(
            story_height=int(meta["story_height"]),
            num_stories=int(meta["num_stories"]),
            seismic_label=str(meta["seismic_label"]),
        ),
    )
