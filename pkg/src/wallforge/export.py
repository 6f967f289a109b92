"""Interchange exports: red-block adjustment images and solver models.

Red-block image: the architectural plan in wall gray with shear limbs in
exact red (255, 0, 0); editable in any image tool and re-importable through
the tolerant vectorizer.

Solver exports: a minimal SAP2000 .s2k text file (one 4-node area element
per limb per story, joints kept per-element so the writer stays
deterministic; SAP merges coincident joints on import) and a lossless JSON
model for anything else.
"""

from __future__ import annotations

import json
from typing import Tuple

import numpy as np

from .errors import DimensionMismatch, UnsupportedFormat
from .geometry import AxisRect, Point2
from .metrics import LimbSpring, MaterialConfig, StructuralModel
from .plan import FloorPlan
from .raster import (DEFAULT_CANVAS, DEFAULT_SCALE, PaletteClass, SemanticRaster,
                     centering_offset, encode_png, paint_rects, rasterize_plan,
                     rgb_from_png)
from .vectorize import LayoutGraph, WallLimb, vectorize_raster

MODEL_SCHEMA = "wallforge.model/1"


# --- red-block image (adjustment interchange) ---

def export_redblock(plan: FloorPlan, graph: LayoutGraph,
                    canvas: int = DEFAULT_CANVAS) -> bytes:
    """PNG with architecture in ArchWall gray and limbs in exact red.

    Openings are cut back to background so the palette stays restricted to
    {Background, ArchWall, ShearWall}. Byte-deterministic for equal input.
    """
    base = rasterize_plan(plan, include_shear=False, canvas=canvas, scale=graph.scale)
    pixels = base.pixels.copy()
    pixels[pixels == int(PaletteClass.Opening)] = int(PaletteClass.Background)

    # limbs are in plan coordinates; reuse the centering offset of the plan
    ox, oy = centering_offset(plan.extent(), canvas, graph.scale)
    paint_rects(pixels, [l.rect() for l in graph.limbs], PaletteClass.ShearWall,
                ox, oy, graph.scale)
    paint_rects(pixels, [c.bounds for c in graph.columns], PaletteClass.ShearWall,
                ox, oy, graph.scale)
    return encode_png(SemanticRaster(pixels, graph.scale))


def import_redblock(png_bytes: bytes, plan: FloorPlan,
                    canvas: int = DEFAULT_CANVAS,
                    scale: int = DEFAULT_SCALE) -> LayoutGraph:
    """Vectorize the red pixels of an (edited) red-block image.

    The image must match the reference raster dimensions. The resulting graph
    is expressed in plan coordinates (centering offset removed).
    """
    from .vectorize import classify_pixels
    rgb = rgb_from_png(png_bytes)
    if rgb.shape[0] != canvas or rgb.shape[1] != canvas:
        raise DimensionMismatch(
            f"image is {rgb.shape[1]}x{rgb.shape[0]}, expected {canvas}x{canvas}")
    raster = classify_pixels(rgb, scale=scale)
    graph = vectorize_raster(raster, source="redblock-import")
    ox, oy = centering_offset(plan.extent(), canvas, scale)
    return _translate_graph(graph, -ox, -oy)


def _translate_graph(graph: LayoutGraph, dx: int, dy: int) -> LayoutGraph:
    from .vectorize import ColumnBlob, Junction
    limbs = [WallLimb((l.centerline[0].translated(dx, dy),
                       l.centerline[1].translated(dx, dy)),
                      l.thickness, l.component_id) for l in graph.limbs]
    junctions = [Junction(j.limb_ids, j.region.translated(dx, dy))
                 for j in graph.junctions]
    columns = [ColumnBlob(c.shape, c.bounds.translated(dx, dy), c.limb_ratios)
               for c in graph.columns]
    return LayoutGraph(limbs=limbs, junctions=junctions, columns=columns,
                       source=graph.source, scale=graph.scale)


# --- solver model export ---

def export_solver_model(model: StructuralModel, format: str) -> bytes:
    """Serialize the structural model: format "S2K" or "ModelJson"."""
    if format == "S2K":
        return _to_s2k(model).encode("ascii")
    if format == "ModelJson":
        return model_to_json(model).encode("utf-8")
    raise UnsupportedFormat(f"unknown format {format!r}")


def _limb_span(limb: WallLimb) -> Tuple[float, float, float, float]:
    """Centerline endpoints in meters (x0, y0, x1, y1)."""
    a, b = limb.centerline
    return a.x / 1000.0, a.y / 1000.0, b.x / 1000.0, b.y / 1000.0


def _to_s2k(model: StructuralModel) -> str:
    """Minimal SAP2000-importable text: one area element per limb per story.

    Joint numbering: element e (limb-major, story-minor) uses joints
    4e+1..4e+4 as (bottom i, bottom j, top j, top i). A rigid-diaphragm
    constraint is assigned per story.
    """
    h = model.story_height
    lines = [
        'TABLE:  "PROGRAM CONTROL"',
        '   ProgramName=SAP2000   Version=14.0.0   CurrUnits="N, m, C"',
        "",
        'TABLE:  "MATERIAL PROPERTIES 01 - GENERAL"',
        f'   Material=CONC   Type=Concrete   E={model.material.E:.6e}   '
        f'G={model.material.shear_modulus:.6e}   UnitMass={model.material.floor_mass_density:.6e}',
        "",
        'TABLE:  "JOINT COORDINATES"',
    ]
    joints = []
    areas = []
    joint_id = 0
    area_id = 0
    for limb_idx, limb in enumerate(model.limbs):
        x0, y0, x1, y1 = _limb_span(limb)
        for story in range(model.num_stories):
            z0, z1 = story * h, (story + 1) * h
            corner = [(x0, y0, z0), (x1, y1, z0), (x1, y1, z1), (x0, y0, z1)]
            ids = []
            for (x, y, z) in corner:
                joint_id += 1
                ids.append(joint_id)
                joints.append((joint_id, x, y, z))
            area_id += 1
            areas.append((area_id, ids, limb_idx, story))
    for jid, x, y, z in joints:
        lines.append(f"   Joint={jid}   CoordSys=GLOBAL   CoordType=Cartesian   "
                     f"XorR={x:.9g}   Y={y:.9g}   Z={z:.9g}")
    lines.append("")
    lines.append('TABLE:  "CONNECTIVITY - AREA"')
    for aid, ids, limb_idx, story in areas:
        lines.append(f"   Area={aid}   NumJoints=4   Joint1={ids[0]}   Joint2={ids[1]}   "
                     f"Joint3={ids[2]}   Joint4={ids[3]}")
    lines.append("")
    lines.append('TABLE:  "AREA SECTION ASSIGNMENTS"')
    for aid, ids, limb_idx, story in areas:
        t = model.limbs[limb_idx].thickness / 1000.0
        lines.append(f"   Area={aid}   Section=WALL_T{model.limbs[limb_idx].thickness}   "
                     f"MatProp=CONC   Thickness={t:.9g}")
    lines.append("")
    lines.append('TABLE:  "JOINT CONSTRAINT ASSIGNMENTS"')
    for aid, ids, limb_idx, story in areas:
        for jid in (ids[2], ids[3]):        # top joints join the story diaphragm
            lines.append(f"   Joint={jid}   Constraint=DIAPH{story + 1}")
    lines.append("")
    lines.append("END TABLE DATA")
    lines.append("")
    return "\n".join(lines)


def s2k_wall_area(text: str) -> float:
    """Total area of the exported wall elements (m^2), from the joint and
    connectivity tables; serves the area-consistency check."""
    joints = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("Joint=") and "XorR=" in line:
            fields = dict(part.split("=") for part in line.split() if "=" in part)
            joints[int(fields["Joint"])] = (float(fields["XorR"]),
                                            float(fields["Y"]), float(fields["Z"]))
    total = 0.0
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("Area=") and "NumJoints=4" in line:
            fields = dict(part.split("=") for part in line.split() if "=" in part)
            p = [np.array(joints[int(fields[f"Joint{i}"])]) for i in range(1, 5)]
            # planar quad: two triangles
            total += 0.5 * np.linalg.norm(np.cross(p[1] - p[0], p[3] - p[0]))
            total += 0.5 * np.linalg.norm(np.cross(p[1] - p[2], p[3] - p[2]))
    return total


# --- lossless JSON model ---

def model_to_json(model: StructuralModel) -> str:
    doc = {
        "schema": MODEL_SCHEMA,
        "limbs": [
            {"centerline": [[l.centerline[0].x, l.centerline[0].y],
                            [l.centerline[1].x, l.centerline[1].y]],
             "thickness": l.thickness, "component_id": l.component_id}
            for l in model.limbs
        ],
        "springs": [
            {"direction": s.direction, "x": s.x, "y": s.y, "k": s.k}
            for s in model.springs
        ],
        "num_stories": model.num_stories,
        "story_height": model.story_height,
        "mass_per_story": model.mass_per_story,
        "rot_inertia": model.rot_inertia,
        "plan_extent": [model.plan_extent.min.x, model.plan_extent.min.y,
                        model.plan_extent.max.x, model.plan_extent.max.y],
        "mass_center": list(model.mass_center),
        "material": {
            "E": model.material.E,
            "G": model.material.G,
            "floor_mass_density": model.material.floor_mass_density,
            "base_shear_coeff": model.material.base_shear_coeff,
            "eccentricity_ratio": model.material.eccentricity_ratio,
        },
        "assumptions": [[p, v, src] for p, v, src in model.assumptions],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def model_from_json(text: str) -> StructuralModel:
    doc = json.loads(text)
    if doc.get("schema") != MODEL_SCHEMA:
        raise UnsupportedFormat(f"unexpected model schema {doc.get('schema')!r}")
    limbs = [
        WallLimb((Point2(*map(int, l["centerline"][0])),
                  Point2(*map(int, l["centerline"][1]))),
                 int(l["thickness"]), int(l.get("component_id", 0)))
        for l in doc["limbs"]
    ]
    springs = [LimbSpring(s["direction"], s["x"], s["y"], s["k"])
               for s in doc["springs"]]
    mat = doc["material"]
    e = doc["plan_extent"]
    return StructuralModel(
        limbs=limbs, springs=springs,
        num_stories=int(doc["num_stories"]),
        story_height=float(doc["story_height"]),
        mass_per_story=float(doc["mass_per_story"]),
        rot_inertia=float(doc["rot_inertia"]),
        plan_extent=AxisRect(Point2(e[0], e[1]), Point2(e[2], e[3])),
        mass_center=tuple(doc["mass_center"]),
        material=MaterialConfig(
            E=mat["E"], G=mat["G"],
            floor_mass_density=mat["floor_mass_density"],
            base_shear_coeff=mat["base_shear_coeff"],
            eccentricity_ratio=mat["eccentricity_ratio"],
        ),
        assumptions=[tuple(a) for a in doc.get("assumptions", [])],
    )
