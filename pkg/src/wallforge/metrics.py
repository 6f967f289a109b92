"""Seismic and geometric layout indicators.

Structural indicators come from a rigid-diaphragm shear-building
approximation: each story is a rigid plate with 3 DOF (ux, uy, rtheta),
every wall limb acts as an inter-story shear spring along its strong axis,
and floors carry a uniform mass density. This is a desk-scale stand-in for a
full FEM run; every parameter it assumes is echoed in the report's
assumptions list so results are auditable.

Geometric indicators count column-like elements and short limbs and total
wall length with junction de-duplication.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import EigenFailure, InsufficientLateralSystem, NonPositiveDefinite
from .geometry import AxisRect, Point2
from .plan import StoryMeta
from .vectorize import LayoutGraph, WallLimb

COLUMN_RATIO = 4.0      # length/thickness <= this -> column-like
SHORT_RATIO = 8.0       # column_ratio < ratio <= this -> short limb

DRIFT_RECIPROCAL_LIMIT = 1000.0   # pass when 1/drift >= 1000 (drift <= 1/1000)
TORSION_LIMIT = 1.4
PERIOD_RATIO_LIMIT = 0.9

GRAVITY = 9.81          # m/s^2

REPORT_SCHEMA = "wallforge.report/1"


@dataclass(frozen=True)
class MaterialConfig:
    E: float = 3.0e10                 # Pa
    G: Optional[float] = None         # Pa; defaults to 0.4 * E
    floor_mass_density: float = 1300  # kg/m^2
    base_shear_coeff: float = 0.08
    eccentricity_ratio: float = 0.05

    @property
    def shear_modulus(self) -> float:
        return self.G if self.G is not None else 0.4 * self.E


@dataclass
class LimbSpring:
    direction: str     # "X" or "Y": axis of lateral resistance (= limb axis)
    x: float           # centroid, m, absolute plan coordinates
    y: float
    k: float           # lateral stiffness per story, N/m


@dataclass
class StructuralModel:
    limbs: List[WallLimb]
    springs: List[LimbSpring]
    num_stories: int
    story_height: float               # m
    mass_per_story: float             # kg
    rot_inertia: float                # kg m^2 about the mass center
    plan_extent: AxisRect             # mm
    mass_center: Tuple[float, float]  # m
    material: MaterialConfig
    assumptions: List[Tuple[str, float, str]] = field(default_factory=list)

    @property
    def plan_dims(self) -> Tuple[float, float]:
        return self.plan_extent.width / 1000.0, self.plan_extent.height / 1000.0


@dataclass(frozen=True)
class Mode:
    period: float                 # s
    shape: np.ndarray             # (3 * num_stories,)
    dominant: str                 # "X" | "Y" | "T"
    fractions: Dict[str, float] = field(default_factory=dict)   # effective-mass shares


@dataclass
class MetricReport:
    drift_reciprocal: float
    r_torsion: float
    r_period: float
    n_column: int
    n_short: int
    l_wall: float                      # m, reported to 0.1 m
    s_layout: Optional[float] = None   # human score 0-10 when recorded
    flags: Dict[str, str] = field(default_factory=dict)
    assumptions: List[Tuple[str, float, str]] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "schema": REPORT_SCHEMA,
            "drift_reciprocal": self.drift_reciprocal,
            "r_torsion": self.r_torsion,
            "r_period": self.r_period,
            "n_column": self.n_column,
            "n_short": self.n_short,
            "l_wall": self.l_wall,
            "s_layout": self.s_layout,
            "flags": self.flags,
            "assumptions": [[p, v, src] for p, v, src in self.assumptions],
        }, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "MetricReport":
        doc = json.loads(text)
        return MetricReport(
            drift_reciprocal=doc["drift_reciprocal"],
            r_torsion=doc["r_torsion"],
            r_period=doc["r_period"],
            n_column=doc["n_column"],
            n_short=doc["n_short"],
            l_wall=doc["l_wall"],
            s_layout=doc.get("s_layout"),
            flags=doc.get("flags", {}),
            assumptions=[tuple(a) for a in doc.get("assumptions", [])],
        )


# --- limb classification and geometric metrics ---

def classify_limb(length: float, thickness: float,
                  thresholds: Tuple[float, float] = (COLUMN_RATIO, SHORT_RATIO)) -> str:
    """Column (ratio <= 4) | ShortLimb (4 < ratio <= 8) | RegularWall (> 8)."""
    if length <= 0 or thickness <= 0:
        raise ValueError("length and thickness must be positive")
    column_ratio, short_ratio = thresholds
    ratio = length / thickness
    if ratio <= column_ratio:
        return "Column"
    if ratio <= short_ratio:
        return "ShortLimb"
    return "RegularWall"


def _rects_adjacent(a: AxisRect, b: AxisRect) -> bool:
    """Overlapping or edge-touching (positive shared edge length)."""
    w = min(a.max.x, b.max.x) - max(a.min.x, b.min.x)
    h = min(a.max.y, b.max.y) - max(a.min.y, b.min.y)
    return (w > 0 and h > 0) or (w > 0 and h == 0) or (w == 0 and h > 0)


def _limb_groups(limbs: Sequence[WallLimb]) -> List[List[int]]:
    """Connected groups under overlap-or-touch adjacency of limb rects."""
    n = len(limbs)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    rects = [l.rect() for l in limbs]
    for i in range(n):
        for j in range(i + 1, n):
            if _rects_adjacent(rects[i], rects[j]):
                parent[find(i)] = find(j)
    groups: Dict[int, List[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _point_in_closed(p: Point2, r: AxisRect) -> bool:
    return r.min.x <= p.x <= r.max.x and r.min.y <= p.y <= r.max.y


def total_wall_length(graph: LayoutGraph) -> float:
    """Sum of limb centerline lengths in meters, junction length counted once.

    Each limb end that lies inside a junction region it participates in gives
    up thickness/2; per-limb contributions floor at zero. Rounded to 0.1 m.
    """
    regions_by_limb: Dict[int, List[AxisRect]] = {}
    for jn in graph.junctions:
        for idx in jn.limb_ids:
            regions_by_limb.setdefault(idx, []).append(jn.region)
    total_mm = 0.0
    for i, limb in enumerate(graph.limbs):
        contribution = float(limb.length)
        for end in limb.centerline:
            if any(_point_in_closed(end, r) for r in regions_by_limb.get(i, [])):
                contribution -= limb.thickness / 2.0
        total_mm += max(contribution, 0.0)
    return round(total_mm / 1000.0, 1)


def compute_geometric_metrics(graph: LayoutGraph,
                              column_ratio: float = COLUMN_RATIO,
                              short_ratio: float = SHORT_RATIO) -> Tuple[int, int, float]:
    """(n_column, n_short, l_wall). Counts follow the classify_limb thresholds."""
    n_column = len(graph.columns)
    for group in _limb_groups(graph.limbs):
        if all(graph.limbs[i].ratio <= column_ratio for i in group):
            n_column += 1
    n_short = sum(
        1 for l in graph.limbs
        if classify_limb(l.length, l.thickness, (column_ratio, short_ratio)) == "ShortLimb"
    )
    return n_column, n_short, total_wall_length(graph)


# --- structural model ---

def limb_stiffness(length_m: float, thickness_m: float, height_m: float,
                   E: float, G: float) -> float:
    """Lateral stiffness of one cantilever wall limb along its strong axis.

    k = 1 / ( h^3 / (12 E I) + 1.2 h / (G A) ),  I = t L^3 / 12,  A = t L.
    """
    I = thickness_m * length_m ** 3 / 12.0
    A = thickness_m * length_m
    return 1.0 / (height_m ** 3 / (12.0 * E * I) + 1.2 * height_m / (G * A))


def build_structural_model(graph: LayoutGraph, story_meta: StoryMeta,
                           material: MaterialConfig = MaterialConfig(),
                           plan_extent: Optional[AxisRect] = None) -> StructuralModel:
    """Assemble the rigid-diaphragm shear-building model from a layout.

    Column blobs carry no lateral stiffness. Raises InsufficientLateralSystem
    when either principal direction has no limb.
    """
    if plan_extent is None:
        rects = [l.rect() for l in graph.limbs] + [c.bounds for c in graph.columns]
        if not rects:
            raise InsufficientLateralSystem("layout has no limbs")
        plan_extent = AxisRect(
            Point2(min(r.min.x for r in rects), min(r.min.y for r in rects)),
            Point2(max(r.max.x for r in rects), max(r.max.y for r in rects)))

    h = story_meta.story_height / 1000.0
    E, G = material.E, material.shear_modulus
    springs: List[LimbSpring] = []
    for limb in graph.limbs:
        cx, cy = limb.rect().center
        springs.append(LimbSpring(
            direction=limb.axis,
            x=cx / 1000.0, y=cy / 1000.0,
            k=limb_stiffness(limb.length / 1000.0, limb.thickness / 1000.0, h, E, G),
        ))
    for direction in ("X", "Y"):
        if not any(s.direction == direction for s in springs):
            raise InsufficientLateralSystem(f"no lateral stiffness in {direction}")

    a, b = plan_extent.width / 1000.0, plan_extent.height / 1000.0
    mass = material.floor_mass_density * a * b
    rot_inertia = mass * (a ** 2 + b ** 2) / 12.0
    cx, cy = plan_extent.center
    assumptions = [
        ("E", E, "config" if material.E != 3.0e10 else "default"),
        ("G", G, "config" if material.G is not None else "default (0.4 E)"),
        ("story_height_m", h, "story_meta"),
        ("num_stories", float(story_meta.num_stories), "story_meta"),
        ("floor_mass_density", material.floor_mass_density,
         "config" if material.floor_mass_density != 1300 else "default"),
        ("base_shear_coeff", material.base_shear_coeff,
         "config" if material.base_shear_coeff != 0.08 else "default"),
        ("eccentricity_ratio", material.eccentricity_ratio,
         "config" if material.eccentricity_ratio != 0.05 else "default"),
    ]
    return StructuralModel(
        limbs=list(graph.limbs), springs=springs,
        num_stories=story_meta.num_stories, story_height=h,
        mass_per_story=mass, rot_inertia=rot_inertia,
        plan_extent=plan_extent, mass_center=(cx / 1000.0, cy / 1000.0),
        material=material, assumptions=assumptions,
    )


def story_stiffness_matrix(model: StructuralModel) -> np.ndarray:
    """3x3 inter-story stiffness about the mass center: DOFs (ux, uy, rtheta).

    A point on the rigid diaphragm at (x, y) relative to the mass center
    moves (ux - rtheta * y, uy + rtheta * x).
    """
    mx, my = model.mass_center
    K = np.zeros((3, 3))
    for s in model.springs:
        rx, ry = s.x - mx, s.y - my
        if s.direction == "X":
            K[0, 0] += s.k
            K[0, 2] += -s.k * ry
            K[2, 0] += -s.k * ry
            K[2, 2] += s.k * ry ** 2
        else:
            K[1, 1] += s.k
            K[1, 2] += s.k * rx
            K[2, 1] += s.k * rx
            K[2, 2] += s.k * rx ** 2
    return K


def assemble_system(model: StructuralModel) -> Tuple[np.ndarray, np.ndarray]:
    """Global (K, M) for the shear building; 3 DOF per story, ground fixed."""
    n = model.num_stories
    Ks = story_stiffness_matrix(model)
    K = np.zeros((3 * n, 3 * n))
    for story in range(n):       # spring below story `story`
        i = 3 * story
        K[i:i + 3, i:i + 3] += Ks
        if story > 0:
            j = 3 * (story - 1)
            K[j:j + 3, j:j + 3] += Ks
            K[j:j + 3, i:i + 3] -= Ks
            K[i:i + 3, j:j + 3] -= Ks
    M = np.zeros((3 * n, 3 * n))
    for story in range(n):
        i = 3 * story
        M[i, i] = model.mass_per_story
        M[i + 1, i + 1] = model.mass_per_story
        M[i + 2, i + 2] = model.rot_inertia
    if not np.allclose(K, K.T, rtol=0, atol=0):
        raise EigenFailure("stiffness matrix is not symmetric")
    try:
        np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        raise NonPositiveDefinite("stiffness matrix is not positive definite")
    return K, M


def solve_modes(model: StructuralModel, num_modes: Optional[int] = None) -> List[Mode]:
    """Modal analysis of K phi = omega^2 M phi; periods sorted descending.

    Each mode is classified by its largest effective-mass fraction among
    X translation, Y translation, and torsion.
    """
    K, M = assemble_system(model)
    ndof = K.shape[0]
    if num_modes is None:
        num_modes = ndof
    if num_modes > ndof:
        raise ValueError(f"num_modes {num_modes} exceeds {ndof} DOF")
    try:
        eigvals, eigvecs = scipy.linalg.eigh(K, M)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise EigenFailure(str(exc))
    if (eigvals <= 0).any():
        raise NonPositiveDefinite("non-positive eigenvalue; model is unstable")

    total_mass = model.mass_per_story * model.num_stories
    total_inertia = model.rot_inertia * model.num_stories
    r_vectors = {
        "X": np.tile([1.0, 0.0, 0.0], model.num_stories),
        "Y": np.tile([0.0, 1.0, 0.0], model.num_stories),
        "T": np.tile([0.0, 0.0, 1.0], model.num_stories),
    }
    totals = {"X": total_mass, "Y": total_mass, "T": total_inertia}

    modes: List[Mode] = []
    for idx in range(num_modes):
        lam = eigvals[idx]
        phi = eigvecs[:, idx]
        residual = np.linalg.norm(K @ phi - lam * (M @ phi))
        if residual > 1e-8 * np.linalg.norm(K @ phi):
            raise EigenFailure(f"mode {idx}: residual {residual:.3e} too large")
        m_gen = float(phi @ M @ phi)
        fractions = {
            kind: float(phi @ M @ r) ** 2 / m_gen / totals[kind]
            for kind, r in r_vectors.items()
        }
        dominant = max(fractions, key=fractions.get)
        modes.append(Mode(period=2.0 * math.pi / math.sqrt(lam), shape=phi,
                          dominant=dominant, fractions=fractions))
    return modes


def _story_forces(model: StructuralModel) -> np.ndarray:
    """Inverted-triangular lateral force per story, summing to the base shear."""
    n = model.num_stories
    heights = np.arange(1, n + 1) * model.story_height
    weights = model.mass_per_story * heights
    base_shear = model.material.base_shear_coeff * model.mass_per_story * n * GRAVITY
    return base_shear * weights / weights.sum()


def static_response(model: StructuralModel, direction: str, ecc_sign: int,
                    eccentricity_ratio: Optional[float] = None) -> np.ndarray:
    """Displacements (3 per story) under eccentric triangular lateral load."""
    K, _ = assemble_system(model)
    a, b = model.plan_dims
    ecc = model.material.eccentricity_ratio if eccentricity_ratio is None else eccentricity_ratio
    forces = _story_forces(model)
    P = np.zeros(3 * model.num_stories)
    for story in range(model.num_stories):
        i = 3 * story
        F = forces[story]
        if direction == "X":
            offset = ecc_sign * ecc * b
            P[i] = F
            P[i + 2] = -F * offset
        else:
            offset = ecc_sign * ecc * a
            P[i + 1] = F
            P[i + 2] = F * offset
    try:
        return np.linalg.solve(K, P)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"static solve failed: {exc}")


def compute_structural_indicators(model: StructuralModel,
                                  eccentricity_ratio: Optional[float] = None
                                  ) -> Tuple[float, float, float]:
    """(drift_reciprocal, r_torsion, r_period).

    drift_reciprocal: min over stories/directions/eccentricity signs of
    h / |story drift at the mass center|. r_torsion: max over the same cases
    of max edge displacement over the mean of the two edge displacements,
    edges taken at the plan faces perpendicular to the load. r_period: first
    torsion-dominant period over the first translation-dominant period.
    """
    modes = solve_modes(model)
    t_torsion = next((m.period for m in modes if m.dominant == "T"), None)
    t_translation = next((m.period for m in modes if m.dominant in ("X", "Y")), None)
    # strongly coupled layouts may leave no mode with torsion as its largest
    # share; fall back to the modes carrying the most torsional/translational
    # effective mass
    if t_torsion is None:
        t_torsion = max(modes, key=lambda m: m.fractions.get("T", 0.0)).period
    if t_translation is None:
        t_translation = max(
            modes, key=lambda m: max(m.fractions.get("X", 0.0),
                                     m.fractions.get("Y", 0.0))).period
    r_period = t_torsion / t_translation

    a, b = model.plan_dims
    h = model.story_height
    drift_reciprocal = math.inf
    r_torsion = 1.0
    for direction in ("X", "Y"):
        dof = 0 if direction == "X" else 1
        half_span = b / 2.0 if direction == "X" else a / 2.0
        for ecc_sign in (+1, -1):
            u = static_response(model, direction, ecc_sign, eccentricity_ratio)
            prev = np.zeros(3)
            for story in range(model.num_stories):
                cur = u[3 * story:3 * story + 3]
                drift = abs(cur[dof] - prev[dof])
                if drift > 0:
                    drift_reciprocal = min(drift_reciprocal, h / drift)
                theta = cur[2]
                if direction == "X":
                    edges = (cur[0] - theta * half_span, cur[0] + theta * half_span)
                else:
                    edges = (cur[1] + theta * half_span, cur[1] - theta * half_span)
                e1, e2 = abs(edges[0]), abs(edges[1])
                mean = (e1 + e2) / 2.0
                if mean > 0:
                    r_torsion = max(r_torsion, max(e1, e2) / mean)
                prev = cur
    return drift_reciprocal, r_torsion, r_period


# --- limits and the full report ---

def evaluate_limits(drift_reciprocal: float, r_torsion: float,
                    r_period: float) -> Dict[str, str]:
    """Code-limit flags, inclusive boundaries: drift passes at >= 1000,
    torsion at <= 1.4, period ratio at <= 0.9."""
    for name, value in (("drift", drift_reciprocal), ("torsion", r_torsion),
                        ("period", r_period)):
        if not math.isfinite(value):
            raise ValueError(f"{name} indicator is not finite")
    return {
        "drift": "Pass" if drift_reciprocal >= DRIFT_RECIPROCAL_LIMIT else "Exceed",
        "torsion": "Pass" if r_torsion <= TORSION_LIMIT else "Exceed",
        "period": "Pass" if r_period <= PERIOD_RATIO_LIMIT else "Exceed",
    }


def evaluate_layout(graph: LayoutGraph, story_meta: StoryMeta,
                    material: MaterialConfig = MaterialConfig(),
                    plan_extent: Optional[AxisRect] = None,
                    s_layout: Optional[float] = None) -> MetricReport:
    """All seven indicators plus flags and the assumption provenance list."""
    n_column, n_short, l_wall = compute_geometric_metrics(graph)
    model = build_structural_model(graph, story_meta, material, plan_extent)
    drift_reciprocal, r_torsion, r_period = compute_structural_indicators(model)
    return MetricReport(
        drift_reciprocal=drift_reciprocal,
        r_torsion=r_torsion,
        r_period=r_period,
        n_column=n_column,
        n_short=n_short,
        l_wall=l_wall,
        s_layout=s_layout,
        flags=evaluate_limits(drift_reciprocal, r_torsion, r_period),
        assumptions=model.assumptions,
    )


def render_report_table(report: MetricReport) -> str:
    """Plain-text table in indicator order 1-6 with Exceed markers."""
    header = f"{'indicator':<22}{'value':>12}  {'limit':>8}  status"
    rows = [
        ("1 drift reciprocal", f"{report.drift_reciprocal:.0f}", ">= 1000",
         report.flags.get("drift", "-")),
        ("2 torsional ratio", f"{report.r_torsion:.2f}", "<= 1.4",
         report.flags.get("torsion", "-")),
        ("3 period ratio", f"{report.r_period:.2f}", "<= 0.9",
         report.flags.get("period", "-")),
        ("4 columns", str(report.n_column), "-", "info"),
        ("5 short limbs", str(report.n_short), "-", "info"),
        ("6 wall length (m)", f"{report.l_wall:.1f}", "-", "info"),
    ]
    lines = [header] + [f"{name:<22}{value:>12}  {limit:>8}  {status}"
                        for name, value, limit, status in rows]
    if report.s_layout is not None:
        lines.append(f"{'7 layout score':<22}{report.s_layout:>12.1f}  {'0..10':>8}  info")
    return "\n".join(lines)
