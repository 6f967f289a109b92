"""Raster -> wall-graph vectorization.

Pipeline: tolerant palette classification -> 4-connected components of the
shear-wall class -> greedy row-run rectangle decomposition (exact pixel
cover) -> thickness snapping to the standard set -> collinear gap merge ->
limbs / columns / junctions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .errors import DegenerateComponent, InvalidGeometry
from .geometry import AxisRect, Point2, merge_collinear, rect_intersection, rect_overlap_area
from .raster import PALETTE_RGB, PaletteClass, SemanticRaster

STANDARD_THICKNESS = (200, 250, 300)   # mm
MIN_COMPONENT_AREA = 4                 # px; smaller blobs are dropped as noise
CLASSIFY_MAX_DIST = 120.0              # RGB Euclidean; farther pixels -> Background
BLOB_RATIO = 2.0                       # aspect at or below -> compact column chunk
DEFAULT_GAP_TOL = 300                  # mm; collinear fragments closer than this merge

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)

LAYOUT_SCHEMA = "wallforge.layout/1"


@dataclass(frozen=True)
class WallLimb:
    centerline: Tuple[Point2, Point2]   # axis-aligned, along the long axis
    thickness: int
    component_id: int = 0

    def __post_init__(self):
        a, b = self.centerline
        if a.x != b.x and a.y != b.y:
            raise InvalidGeometry("limb centerline must be axis-aligned")
        if a == b:
            raise InvalidGeometry("limb centerline has zero length")

    @property
    def axis(self) -> str:
        return "X" if self.centerline[0].y == self.centerline[1].y else "Y"

    @property
    def length(self) -> int:
        a, b = self.centerline
        return abs(b.x - a.x) + abs(b.y - a.y)

    @property
    def ratio(self) -> float:
        return self.length / self.thickness

    def rect(self) -> AxisRect:
        a, b = self.centerline
        half = self.thickness // 2
        other = self.thickness - half
        if self.axis == "X":
            x0, x1 = min(a.x, b.x), max(a.x, b.x)
            return AxisRect(Point2(x0, a.y - half), Point2(x1, a.y + other))
        y0, y1 = min(a.y, b.y), max(a.y, b.y)
        return AxisRect(Point2(a.x - half, y0), Point2(a.x + other, y1))


@dataclass(frozen=True)
class Junction:
    limb_ids: Tuple[int, int]
    region: AxisRect


@dataclass(frozen=True)
class ColumnBlob:
    shape: str                    # "Rectangular" | "Irregular"
    bounds: AxisRect
    limb_ratios: Tuple[float, ...]


@dataclass
class LayoutGraph:
    limbs: List[WallLimb] = field(default_factory=list)
    junctions: List[Junction] = field(default_factory=list)
    columns: List[ColumnBlob] = field(default_factory=list)
    source: str = ""
    scale: int = 100

    def validate(self) -> None:
        for i, a in enumerate(self.limbs):
            for j in range(i + 1, len(self.limbs)):
                b = self.limbs[j]
                if a.axis != b.axis:
                    continue
                overlap = rect_overlap_area(a.rect(), b.rect())
                if overlap > max(a.thickness, b.thickness) ** 2:
                    raise InvalidGeometry(
                        f"same-axis limbs {i} and {j} overlap beyond a junction region")
        for jn in self.junctions:
            if len(set(jn.limb_ids)) < 2:
                raise InvalidGeometry("junction must reference two distinct limbs")

    def limb_rects(self) -> List[AxisRect]:
        return [l.rect() for l in self.limbs]


# --- classification ---

def classify_pixels(rgb: np.ndarray, scale: int = 100) -> SemanticRaster:
    """Quantize an RGB image to the palette.

    Nearest palette class by Euclidean RGB distance; anything farther than
    CLASSIFY_MAX_DIST falls back to Background. ShearWall additionally needs
    red dominance (R >= 180, G <= 110, B <= 110); failing pixels take the
    nearest remaining class. Idempotent on already-quantized images.
    """
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) RGB array")
    flat = rgb.reshape(-1, 3).astype(np.int64)
    palette = np.array(PALETTE_RGB, dtype=np.int64)
    dist = np.sqrt(((flat[:, None, :] - palette[None, :, :]) ** 2).sum(axis=2))
    nearest = dist.argmin(axis=1)

    red_ok = (flat[:, 0] >= 180) & (flat[:, 1] <= 110) & (flat[:, 2] <= 110)
    demote = (nearest == int(PaletteClass.ShearWall)) & ~red_ok
    if demote.any():
        nearest[demote] = dist[demote, :3].argmin(axis=1)

    chosen = dist[np.arange(len(flat)), nearest]
    nearest[chosen > CLASSIFY_MAX_DIST] = int(PaletteClass.Background)
    return SemanticRaster(nearest.reshape(rgb.shape[:2]).astype(np.uint8), scale)


def fill_pinholes(mask: np.ndarray) -> np.ndarray:
    """Fill dropout pixels that have >= 3 of 4 orthogonal wall neighbors.

    Repairs salt-and-pepper holes inside and on the edges of generated walls
    while staying an identity on clean rectangle unions (a concave corner
    pixel has only 2 orthogonal neighbors, so morphological closing would be
    too aggressive here).
    """
    m = mask.copy()
    for _ in range(2):
        padded = np.pad(m, 1)
        neighbors = (padded[:-2, 1:-1].astype(np.uint8) + padded[2:, 1:-1]
                     + padded[1:-1, :-2] + padded[1:-1, 2:])
        fill = ~m & (neighbors >= 3)
        if not fill.any():
            break
        m |= fill
    return m


# --- components & decomposition ---

@dataclass
class PixelComponent:
    mask: np.ndarray      # bool submask
    row0: int             # offset of mask[0, 0] in the full raster
    col0: int

    @property
    def area(self) -> int:
        return int(self.mask.sum())


def extract_components(raster: SemanticRaster, cls: PaletteClass = PaletteClass.ShearWall,
                       min_area: int = MIN_COMPONENT_AREA,
                       despeckle: bool = False) -> Tuple[List[PixelComponent], int]:
    """4-connected components of a class. Returns (components, dropped_noise_count)."""
    mask = raster.class_mask(cls)
    if despeckle:
        mask = fill_pinholes(mask)
    labels, count = ndimage.label(mask, structure=_CROSS)
    components: List[PixelComponent] = []
    noise = 0
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        sub = labels[sl] == idx
        if int(sub.sum()) < min_area:
            noise += 1
            continue
        components.append(PixelComponent(sub, sl[0].start, sl[1].start))
    return components, noise


def decompose_pixels(component: PixelComponent) -> List[Tuple[int, int, int, int]]:
    """Greedy row-run merge: exact, disjoint rectangle cover of the component.

    Scans rows top-to-bottom, runs left-to-right; a run extends the rectangle
    above it only when the column interval matches exactly. Returns pixel
    rects (row0, col0, row1, col1), half-open, in full-raster coordinates.
    """
    mask = component.mask
    h, w = mask.shape
    done: List[Tuple[int, int, int, int]] = []
    active: Dict[Tuple[int, int], int] = {}    # (c0, c1) -> start row
    for r in range(h + 1):
        runs = _row_runs(mask[r]) if r < h else []
        run_set = set(runs)
        for (c0, c1), rs in sorted(active.items()):
            if (c0, c1) not in run_set:
                done.append((rs, c0, r, c1))
        active = {run: active.get(run, r) for run in runs}
    done.sort()
    return [(r0 + component.row0, c0 + component.col0,
             r1 + component.row0, c1 + component.col0) for (r0, c0, r1, c1) in done]


def _row_runs(row: np.ndarray) -> List[Tuple[int, int]]:
    padded = np.concatenate(([False], row, [False]))
    delta = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(delta == 1)
    ends = np.flatnonzero(delta == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def pixel_rect_to_mm(pr: Tuple[int, int, int, int], canvas: int, scale: int) -> AxisRect:
    """Map a half-open pixel rect to plan mm (row 0 = top = max y)."""
    r0, c0, r1, c1 = pr
    return AxisRect(Point2(c0 * scale, (canvas - r1) * scale),
                    Point2(c1 * scale, (canvas - r0) * scale))


def snap_thickness(rect: AxisRect,
                   thickness_set: Sequence[int] = STANDARD_THICKNESS,
                   align: Optional[int] = None) -> Optional[AxisRect]:
    """Snap the short dimension to the nearest standard thickness about the
    centerline. With ``align`` (the raster scale), the band's low edge also
    rounds to the pixel grid, so half-pixel-wobbled fragments land back on
    the band of the wall they came from. Returns None when the snapped rect
    would be invalid (long dimension shorter than the snapped thickness)."""
    from .geometry import snap_value

    horizontal = rect.width >= rect.height
    thickness = rect.height if horizontal else rect.width
    target = min(thickness_set, key=lambda t: (abs(t - thickness), t))
    long_dim = rect.width if horizontal else rect.height
    if long_dim < target:
        return None
    if horizontal:
        lo = (rect.min.y + rect.max.y - target) // 2
        if align:
            lo = snap_value(lo, align)
        return AxisRect(Point2(rect.min.x, lo), Point2(rect.max.x, lo + target))
    lo = (rect.min.x + rect.max.x - target) // 2
    if align:
        lo = snap_value(lo, align)
    return AxisRect(Point2(lo, rect.min.y), Point2(lo + target, rect.max.y))


def _along_iou(a0: int, a1: int, b0: int, b1: int) -> float:
    inter = min(a1, b1) - max(a0, b0)
    union = max(a1, b1) - min(a0, b0)
    return inter / union if union > 0 else 0.0


def repair_pixel_fragments(pixel_rects: List[Tuple[int, int, int, int]],
                           max_cross_px: int) -> List[Tuple[int, int, int, int]]:
    """Heal corner-nick fragmentation in pixel space.

    A noise pixel chipped off a wall corner splits the run cover into two
    stacked slivers spanning almost the same interval; those merge back into
    one rect. Attached bumps (tiny along-overlap) are left alone and fall to
    thickness snapping. Exact covers of clean rectangles are unaffected
    because the row-run scan never splits a clean run this way.
    """
    rects = sorted(pixel_rects)
    while True:
        merged_any = False
        out: List[Tuple[int, int, int, int]] = []
        used = [False] * len(rects)
        for i, a in enumerate(rects):
            if used[i]:
                continue
            r0, c0, r1, c1 = a
            for j in range(i + 1, len(rects)):
                if used[j]:
                    continue
                s0, d0, s1, d1 = rects[j]
                horiz_a = (c1 - c0) >= (r1 - r0)
                horiz_b = (d1 - d0) >= (s1 - s0)
                if horiz_a and horiz_b:
                    bands_touch = s0 <= r1 and r0 <= s1
                    close = _along_iou(c0, c1, d0, d1) >= 0.8
                    cross = max(r1, s1) - min(r0, s0)
                elif not horiz_a and not horiz_b:
                    bands_touch = d0 <= c1 and c0 <= d1
                    close = _along_iou(r0, r1, s0, s1) >= 0.8
                    cross = max(c1, d1) - min(c0, d0)
                else:
                    continue
                if bands_touch and close and cross <= max_cross_px:
                    r0, c0 = min(r0, s0), min(c0, d0)
                    r1, c1 = max(r1, s1), max(c1, d1)
                    used[j] = True
                    merged_any = True
            out.append((r0, c0, r1, c1))
        if not merged_any:
            return out
        rects = sorted(out)


def decompose_component(component: PixelComponent, canvas: int, scale: int,
                        thickness_set: Sequence[int] = STANDARD_THICKNESS,
                        gap_tol: int = DEFAULT_GAP_TOL) -> List[AxisRect]:
    """Pixel component -> snapped, merged mm rects.

    Raises DegenerateComponent when nothing survives thickness snapping.
    """
    max_cross_px = -(-max(thickness_set) // scale)
    pixel_rects = repair_pixel_fragments(decompose_pixels(component), max_cross_px)
    snapped = []
    for pr in pixel_rects:
        rect = snap_thickness(pixel_rect_to_mm(pr, canvas, scale), thickness_set,
                              align=scale)
        if rect is not None:
            snapped.append(rect)
    if not snapped:
        raise DegenerateComponent(
            f"component at ({component.row0}, {component.col0}) has no usable rects")
    return _merge_both_axes(snapped, gap_tol)


def _merge_both_axes(rects: List[AxisRect], gap_tol: int) -> List[AxisRect]:
    """Collinear-merge along X then Y until stable; square fragments (e.g.
    the stubs a crossing bar cuts out of a limb) may extend either way."""
    key = lambda r: (r.min.y, r.min.x, r.max.y, r.max.x)
    cur = sorted(rects, key=key)
    while True:
        merged = merge_collinear(cur, "X", gap_tol)
        merged = sorted(merge_collinear(merged, "Y", gap_tol), key=key)
        if merged == cur:
            return cur
        cur = merged


# --- graph assembly ---

def _rect_ratio(r: AxisRect) -> float:
    return max(r.width, r.height) / min(r.width, r.height)


def rebuild_junctions(limbs: Sequence[WallLimb]) -> List[Junction]:
    """One junction per overlapping limb pair (positive intersection area)."""
    junctions = []
    rects = [l.rect() for l in limbs]
    for i in range(len(limbs)):
        for j in range(i + 1, len(limbs)):
            region = rect_intersection(rects[i], rects[j])
            if region is not None:
                junctions.append(Junction((i, j), region))
    return junctions


def build_layout_graph(rect_sets: Sequence[Sequence[AxisRect]], scale: int,
                       source: str = "",
                       blob_ratio: float = BLOB_RATIO) -> LayoutGraph:
    """Assemble a LayoutGraph from per-component rect sets.

    A component whose every rect is compact (aspect <= blob_ratio) becomes one
    ColumnBlob; everything else becomes WallLimbs. Longer column-class limbs
    stay limbs and are picked up by the metrics' all-column group rule, so the
    column count is the same either way. Junctions connect overlapping limb
    rectangles.
    """
    limbs: List[WallLimb] = []
    columns: List[ColumnBlob] = []
    for comp_id, rects in enumerate(rect_sets):
        if not rects:
            continue
        ratios = [_rect_ratio(r) for r in rects]
        if all(q <= blob_ratio for q in ratios):
            x0 = min(r.min.x for r in rects)
            y0 = min(r.min.y for r in rects)
            x1 = max(r.max.x for r in rects)
            y1 = max(r.max.y for r in rects)
            shape = "Rectangular" if len(rects) == 1 else "Irregular"
            columns.append(ColumnBlob(shape, AxisRect(Point2(x0, y0), Point2(x1, y1)),
                                      tuple(ratios)))
            continue
        for r in rects:
            limbs.append(_rect_to_limb(r, comp_id))
    graph = LayoutGraph(limbs=limbs, junctions=rebuild_junctions(limbs),
                        columns=columns, source=source, scale=scale)
    graph.validate()
    return graph


def _rect_to_limb(r: AxisRect, comp_id: int) -> WallLimb:
    if r.width >= r.height:
        yc = (r.min.y + r.max.y) // 2
        return WallLimb((Point2(r.min.x, yc), Point2(r.max.x, yc)),
                        thickness=r.height, component_id=comp_id)
    xc = (r.min.x + r.max.x) // 2
    return WallLimb((Point2(xc, r.min.y), Point2(xc, r.max.y)),
                    thickness=r.width, component_id=comp_id)


def _rects_touch_or_overlap(a: AxisRect, b: AxisRect) -> bool:
    w = min(a.max.x, b.max.x) - max(a.min.x, b.min.x)
    h = min(a.max.y, b.max.y) - max(a.min.y, b.min.y)
    return (w > 0 and h >= 0) or (w >= 0 and h > 0)


def _repair_same_axis_overlaps(rects: List[AxisRect], thickness_set: Sequence[int],
                               align: Optional[int] = None) -> List[AxisRect]:
    """Union same-axis rects that overlap beyond a junction-sized region.

    Thickness snapping of noise-wobbled fragments can leave parallel rects
    sharing long bands; the graph invariant forbids that, so they collapse to
    their bounding union (re-snapped). Clean geometry is untouched.
    """
    key = lambda r: (r.min.y, r.min.x, r.max.y, r.max.x)
    rects = sorted(rects, key=key)
    while True:
        merged_any = False
        out: List[AxisRect] = []
        used = [False] * len(rects)
        for i, a in enumerate(rects):
            if used[i]:
                continue
            for j in range(i + 1, len(rects)):
                if used[j]:
                    continue
                b = rects[j]
                axis_a = a.width >= a.height
                axis_b = b.width >= b.height
                bound = max(min(a.width, a.height), min(b.width, b.height)) ** 2
                if axis_a == axis_b and rect_overlap_area(a, b) > bound:
                    union = AxisRect(
                        Point2(min(a.min.x, b.min.x), min(a.min.y, b.min.y)),
                        Point2(max(a.max.x, b.max.x), max(a.max.y, b.max.y)))
                    snapped = snap_thickness(union, thickness_set, align=align)
                    if snapped is not None:
                        a = snapped
                    used[j] = True
                    merged_any = True
            out.append(a)
        if not merged_any:
            return out
        rects = sorted(out, key=key)


def _group_by_adjacency(rects: List[AxisRect]) -> List[List[AxisRect]]:
    n = len(rects)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if _rects_touch_or_overlap(rects[i], rects[j]):
                parent[find(i)] = find(j)
    groups: Dict[int, List[AxisRect]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(rects[i])
    return [groups[k] for k in sorted(groups)]


def vectorize_raster(raster: SemanticRaster, source: str = "",
                     min_area: int = MIN_COMPONENT_AREA,
                     thickness_set: Sequence[int] = STANDARD_THICKNESS,
                     gap_tol: int = DEFAULT_GAP_TOL,
                     despeckle: bool = False) -> LayoutGraph:
    """Full pipeline: ShearWall mask -> components -> rects -> LayoutGraph.

    Degenerate components (nothing survives snapping) are dropped like noise;
    over-overlapping parallel fragments are unioned before graph assembly.
    On clean rasters both repairs are identities.
    """
    components, _ = extract_components(raster, PaletteClass.ShearWall,
                                       min_area=min_area, despeckle=despeckle)
    all_rects: List[AxisRect] = []
    for comp in components:
        try:
            all_rects.extend(decompose_component(comp, raster.canvas, raster.scale,
                                                 thickness_set, gap_tol))
        except DegenerateComponent:
            continue
    repaired = _repair_same_axis_overlaps(all_rects, thickness_set,
                                          align=raster.scale)
    rect_sets = _group_by_adjacency(repaired)
    return build_layout_graph(rect_sets, raster.scale, source=source)


# --- JSON round trip (documented schema: wallforge.layout/1) ---

def graph_to_json(graph: LayoutGraph) -> str:
    doc = {
        "schema": LAYOUT_SCHEMA,
        "scale": graph.scale,
        "source": graph.source,
        "limbs": [
            {
                "centerline": [[l.centerline[0].x, l.centerline[0].y],
                               [l.centerline[1].x, l.centerline[1].y]],
                "thickness": l.thickness,
                "component_id": l.component_id,
            }
            for l in graph.limbs
        ],
        "junctions": [
            {"limbs": list(j.limb_ids),
             "region": [j.region.min.x, j.region.min.y, j.region.max.x, j.region.max.y]}
            for j in graph.junctions
        ],
        "columns": [
            {"shape": c.shape,
             "bounds": [c.bounds.min.x, c.bounds.min.y, c.bounds.max.x, c.bounds.max.y],
             "limb_ratios": list(c.limb_ratios)}
            for c in graph.columns
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def graph_from_json(text: str) -> LayoutGraph:
    doc = json.loads(text)
    if doc.get("schema") != LAYOUT_SCHEMA:
        raise InvalidGeometry(f"unexpected layout schema {doc.get('schema')!r}")
    limbs = [
        WallLimb(
            (Point2(*map(int, l["centerline"][0])), Point2(*map(int, l["centerline"][1]))),
            thickness=int(l["thickness"]),
            component_id=int(l.get("component_id", 0)),
        )
        for l in doc["limbs"]
    ]
    junctions = [
        Junction((int(j["limbs"][0]), int(j["limbs"][1])),
                 AxisRect(Point2(j["region"][0], j["region"][1]),
                          Point2(j["region"][2], j["region"][3])))
        for j in doc["junctions"]
    ]
    columns = [
        ColumnBlob(c["shape"],
                   AxisRect(Point2(c["bounds"][0], c["bounds"][1]),
                            Point2(c["bounds"][2], c["bounds"][3])),
                   tuple(float(q) for q in c["limb_ratios"]))
        for c in doc["columns"]
    ]
    return LayoutGraph(limbs=limbs, junctions=junctions, columns=columns,
                       source=doc.get("source", ""), scale=int(doc["scale"]))
