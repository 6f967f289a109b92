"""Project persistence and pipeline orchestration.

A project is a plain directory: content files plus a single manifest
(project.json) that is the atomic commit point. Every mutation writes its
content files first, then replaces the manifest via write-to-temp + rename,
so an interruption at any point leaves the project loadable in either the
pre-step or post-step state.

Layouts form an immutable lineage forest: vectorized candidates are roots,
edits create children. Metrics are recomputed eagerly on edit.
"""

from __future__ import annotations

import base64
import fcntl
import json
import os
import uuid
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from . import dataset as dataset_mod
from .dxf import parse_dxf
from .errors import (DependencyMissing, DuplicateName, EigenFailure, InsufficientLateralSystem,
                     InvalidGeometry, NonPositiveDefinite, OutOfRange, UnknownLayout,
                     WallforgeError)
from .export import export_redblock, export_solver_model
from .geometry import Point2
from .metrics import (build_structural_model, compute_geometric_metrics,
                      evaluate_layout)
from .plan import (FloorPlan, LayerMap, StoryMeta, apply_layer_map, normalize_plan,
                   plan_from_json, plan_to_json)
from .raster import DEFAULT_CANVAS, DEFAULT_SCALE, decode_png, encode_png, rasterize_plan
from .sdclient import (ApiEndpoint, DiffusionClient, GenerationRequest, Transport)
from .vectorize import (LayoutGraph, WallLimb, graph_from_json, graph_to_json,
                        rebuild_junctions, vectorize_raster)

MANIFEST = "project.json"
MANIFEST_SCHEMA = "wallforge.project/1"

STEP_KINDS = ("Ingest", "Rasterize", "BuildDataset", "Generate", "Vectorize",
              "Evaluate", "Export")

EDIT_KINDS = ("AddLimb", "RemoveLimb", "MoveLimb", "ResizeLimb")


class CrashInjected(RuntimeError):
    """Raised by test fault hooks to simulate an interruption."""


@dataclass
class PipelineStep:
    kind: str
    params: Dict[str, object] = field(default_factory=dict)
    status: str = "pending"
    outputs: List[str] = field(default_factory=list)


class ProjectStore:
    """Filesystem layer with write-then-rename commits and a fault hook."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.hook: Optional[Callable[[str, str], None]] = None

    def _fire(self, phase: str, rel: str):
        if self.hook is not None:
            self.hook(phase, rel)

    def write_bytes(self, rel: str, data: bytes) -> None:
        path = self.directory / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        self._fire("write", rel)
        tmp = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
        tmp.write_bytes(data)
        self._fire("commit", rel)
        os.replace(tmp, path)
        self._fire("done", rel)

    def write_text(self, rel: str, text: str) -> None:
        self.write_bytes(rel, text.encode("utf-8"))

    def read_bytes(self, rel: str) -> bytes:
        return (self.directory / rel).read_bytes()

    def read_text(self, rel: str) -> str:
        return self.read_bytes(rel).decode("utf-8")

    def exists(self, rel: str) -> bool:
        return (self.directory / rel).exists()

    @contextmanager
    def locked(self):
        """One writer per project (advisory lock)."""
        lock_path = self.directory / ".lock"
        with open(lock_path, "w") as f:
            fcntl.flock(f, fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(f, fcntl.LOCK_UN)


class Project:
    def __init__(self, store: ProjectStore, manifest: dict):
        self.store = store
        self.manifest = manifest

    # --- lifecycle ---

    @property
    def name(self) -> str:
        return self.manifest["name"]

    @staticmethod
    def create(root: Path, name: str, dxf_bytes: bytes, layer_map: LayerMap,
               story_meta: Optional[StoryMeta] = None) -> "Project":
        """Parse, normalize and persist a new project.

        Parsing happens before any directory is created, so a malformed DXF
        leaves nothing behind. Raises DuplicateName when the directory exists.
        """
        doc = parse_dxf(dxf_bytes)
        plan = normalize_plan(apply_layer_map(doc, layer_map, story_meta))

        directory = Path(root) / name
        if directory.exists():
            raise DuplicateName(f"project {name!r} already exists")
        directory.mkdir(parents=True)
        store = ProjectStore(directory)
        store.write_text("plan.json", plan_to_json(plan))
        manifest = {
            "schema": MANIFEST_SCHEMA,
            "name": name,
            "plan": "plan.json",
            "rasters": {},
            "candidate_sets": [],
            "layouts": {},
            "reports": {},
            "scores": {},
            "preferred": None,
            "steps": [],
            "counters": {"layout": 0, "candidate_set": 0, "file": 0},
        }
        project = Project(store, manifest)
        project._commit()
        return project

    @staticmethod
    def load(root: Path, name: str) -> "Project":
        store = ProjectStore(Path(root) / name)
        manifest = json.loads(store.read_text(MANIFEST))
        if manifest.get("schema") != MANIFEST_SCHEMA:
            raise WallforgeError(f"unexpected manifest schema in {name!r}")
        project = Project(store, manifest)
        project._check_lineage()
        return project

    @staticmethod
    def list_projects(root: Path) -> List[str]:
        root = Path(root)
        if not root.exists():
            return []
        return sorted(p.name for p in root.iterdir() if (p / MANIFEST).exists())

    def _commit(self):
        self.store.write_text(MANIFEST,
                              json.dumps(self.manifest, indent=2, sort_keys=True))

    def _fresh(self, stem: str, ext: str) -> str:
        """Copy-on-write content naming: files referenced by a committed
        manifest are never rewritten in place, so an interruption between a
        content write and the manifest commit cannot corrupt the old state."""
        counters = self.manifest.setdefault("counters", {})
        counters["file"] = n = counters.get("file", 0) + 1
        return f"{stem}.f{n:04d}.{ext}"

    def _check_lineage(self):
        layouts = self.manifest["layouts"]
        for lid, meta in layouts.items():
            seen = {lid}
            parent = meta.get("parent")
            while parent is not None:
                if parent in seen:
                    raise WallforgeError(f"layout lineage cycle at {lid}")
                seen.add(parent)
                parent = layouts.get(parent, {}).get("parent")

    # --- accessors ---

    def plan(self) -> FloorPlan:
        return plan_from_json(self.store.read_text(self.manifest["plan"]))

    def layout(self, layout_id: str) -> LayoutGraph:
        meta = self.manifest["layouts"].get(layout_id)
        if meta is None:
            raise UnknownLayout(f"no layout {layout_id!r}")
        return graph_from_json(self.store.read_text(meta["file"]))

    def report(self, layout_id: str) -> Optional[dict]:
        rel = self.manifest["reports"].get(layout_id)
        if rel is None:
            return None
        return json.loads(self.store.read_text(rel))

    def layout_ids(self) -> List[str]:
        return sorted(self.manifest["layouts"])

    def story_meta(self) -> StoryMeta:
        return self.plan().story_meta

    # --- pipeline ---

    def run_step(self, step: PipelineStep,
                 transport: Optional[Transport] = None) -> PipelineStep:
        """Execute one pipeline step; outputs persist, manifest commits last.

        Raises DependencyMissing when required upstream outputs are absent;
        failures leave the previous manifest state intact.
        """
        if step.kind not in STEP_KINDS:
            raise WallforgeError(f"unknown step kind {step.kind!r}")
        with self.store.locked():
            handler = getattr(self, f"_step_{step.kind.lower()}")
            if step.kind == "Generate":
                outputs = handler(step.params, transport)
            else:
                outputs = handler(step.params)
            step.status = "done"
            step.outputs = outputs
            self.manifest["steps"].append(
                {"kind": step.kind, "params": step.params, "outputs": outputs})
            self._commit()
        return step

    def _step_ingest(self, params: dict) -> List[str]:
        dxf_bytes = base64.b64decode(params["dxf_b64"]) if "dxf_b64" in params \
            else Path(params["dxf_path"]).read_bytes()
        layer_map = LayerMap.from_config_text(params["layers_config"])
        plan = normalize_plan(apply_layer_map(parse_dxf(dxf_bytes), layer_map))
        rel = self._fresh("plan", "json")
        self.store.write_text(rel, plan_to_json(plan))
        self.manifest["plan"] = rel
        return [rel]

    def _step_rasterize(self, params: dict) -> List[str]:
        plan = self.plan()
        canvas = int(params.get("canvas", DEFAULT_CANVAS))
        scale = int(params.get("scale", DEFAULT_SCALE))
        outputs = []
        condition = rasterize_plan(plan, include_shear=False, canvas=canvas, scale=scale)
        cond_rel = self._fresh("rasters/condition", "png")
        self.store.write_bytes(cond_rel, encode_png(condition))
        outputs.append(cond_rel)
        target_rel = None
        if plan.shear_walls:
            target = rasterize_plan(plan, include_shear=True, canvas=canvas, scale=scale)
            target_rel = self._fresh("rasters/target", "png")
            self.store.write_bytes(target_rel, encode_png(target))
            outputs.append(target_rel)
        self.manifest["rasters"] = {
            "canvas": canvas, "scale": scale,
            "condition": cond_rel,
            "target": target_rel,
        }
        return outputs

    def _step_builddataset(self, params: dict) -> List[str]:
        plan = self.plan()
        if not plan.shear_walls:
            raise DependencyMissing("plan has no shear walls; nothing to train on")
        caption = str(params.get("caption", "Shear Wall Layout"))
        counters = self.manifest["counters"]
        counters["file"] = n = counters.get("file", 0) + 1
        rel_dir = f"dataset/run{n:04d}"
        out_dir = self.store.directory / rel_dir
        manifest = dataset_mod.build_dataset([plan], caption, out_dir)
        config = dataset_mod.emit_trainer_config(
            manifest, params.get("overrides"), out_dir / "trainer_config.txt")
        self.manifest["dataset"] = {
            "dir": rel_dir, "num_pairs": manifest.num_pairs,
            "warnings": manifest.warnings,
            "trainer_config": {
                "epochs": config.epochs, "steps_per_epoch": config.steps_per_epoch,
                "image_size": config.image_size, "label": config.label,
                "output_name": config.output_name,
            },
        }
        return [f"{rel_dir}/manifest.json", f"{rel_dir}/trainer_config.txt"]

    def _step_generate(self, params: dict,
                       transport: Optional[Transport] = None) -> List[str]:
        rasters = self.manifest.get("rasters") or {}
        if not rasters.get("condition"):
            raise DependencyMissing("run Rasterize before Generate")
        condition = decode_png(self.store.read_bytes(rasters["condition"]),
                               scale=rasters["scale"])
        base_url = params.get("api_url") or os.environ.get("WALLFORGE_SD_URL")
        if not base_url:
            raise DependencyMissing("no diffusion endpoint (set WALLFORGE_SD_URL)")
        endpoint = ApiEndpoint(base_url=base_url,
                               timeout=float(params.get("timeout", 60.0)))
        client = DiffusionClient(endpoint, transport)
        seed = params.get("seed", "random")
        req = GenerationRequest(
            prompt=str(params.get("prompt", "Shear Wall Layout")),
            negative_prompt=str(params.get("negative_prompt", "")),
            condition_image=condition,
            lora_name=str(params.get("lora", "")),
            lora_weight=float(params.get("lora_weight", 0.8)),
            sampler=str(params.get("sampler", "Euler a")),
            steps=int(params.get("steps", 30)),
            cfg_scale=float(params.get("cfg_scale", 7.0)),
            seed=seed if seed == "random" else int(seed),
            batch=int(params.get("batch", 4)),
            control_weight=float(params.get("control_weight", 1.0)),
        )
        result = client.generate_candidates(req)
        set_idx = self.manifest["counters"]["candidate_set"]
        self.manifest["counters"]["candidate_set"] = set_idx + 1
        set_dir = f"candidates/set_{set_idx:03d}"
        outputs = []
        entries = []
        for cand in result.candidates:
            rel = f"{set_dir}/cand_{cand.id}.png"
            self.store.write_bytes(rel, encode_png(cand.raster))
            outputs.append(rel)
            entries.append({"id": cand.id, "file": rel, "seed": cand.seed})
        self.manifest["candidate_sets"].append({
            "set": set_idx, "dir": set_dir, "candidates": entries,
            "params": {"prompt": req.prompt, "sampler": req.sampler,
                       "steps": req.steps, "cfg_scale": req.cfg_scale,
                       "seed": str(req.seed), "batch": req.batch,
                       "lora": req.lora_name, "lora_weight": req.lora_weight,
                       "control_weight": req.control_weight},
        })
        return outputs

    def _candidate_raster(self, set_idx: int, cand_id: int):
        for cs in self.manifest["candidate_sets"]:
            if cs["set"] == set_idx:
                for cand in cs["candidates"]:
                    if cand["id"] == cand_id:
                        rasters = self.manifest.get("rasters") or {}
                        return decode_png(self.store.read_bytes(cand["file"]),
                                          scale=rasters.get("scale", DEFAULT_SCALE))
        raise DependencyMissing(f"no candidate {set_idx}/{cand_id}")

    def _step_vectorize(self, params: dict) -> List[str]:
        if not self.manifest["candidate_sets"]:
            raise DependencyMissing("run Generate before Vectorize")
        set_idx = int(params.get("set", self.manifest["candidate_sets"][-1]["set"]))
        cand_id = int(params.get("candidate", 0))
        raster = self._candidate_raster(set_idx, cand_id)
        graph = vectorize_raster(raster, source=f"candidate:{set_idx}/{cand_id}",
                                 despeckle=bool(params.get("despeckle", True)))
        layout_id = self._store_layout(graph, parent=None)
        return [self.manifest["layouts"][layout_id]["file"]]

    def _step_evaluate(self, params: dict) -> List[str]:
        layout_ids = [params["layout"]] if "layout" in params else [
            lid for lid in self.layout_ids() if lid not in self.manifest["reports"]]
        if not layout_ids:
            raise DependencyMissing("no layouts to evaluate; run Vectorize first")
        outputs = []
        for lid in layout_ids:
            outputs.append(self._store_report(lid))
        return outputs

    def _step_export(self, params: dict) -> List[str]:
        layout_id = params["layout"]
        fmt = params.get("format", "json")
        graph = self.layout(layout_id)
        plan = self.plan()
        out_rel = self._fresh(f"exports/{layout_id}", fmt)
        if fmt == "png":
            data = export_redblock(plan, graph)
        elif fmt in ("s2k", "json"):
            model = build_structural_model(graph, plan.story_meta,
                                           plan_extent=plan.extent())
            data = export_solver_model(model, "S2K" if fmt == "s2k" else "ModelJson")
        else:
            raise WallforgeError(f"unknown export format {fmt!r}")
        self.store.write_bytes(out_rel, data)
        self.manifest.setdefault("exports", []).append(out_rel)
        return [out_rel]

    # --- layouts, reports, edits, scores ---

    def _store_layout(self, graph: LayoutGraph, parent: Optional[str]) -> str:
        idx = self.manifest["counters"]["layout"]
        self.manifest["counters"]["layout"] = idx + 1
        layout_id = f"L{idx:04d}"
        rel = f"layouts/{layout_id}.json"
        self.store.write_text(rel, graph_to_json(graph))
        self.manifest["layouts"][layout_id] = {
            "file": rel, "parent": parent, "source": graph.source,
        }
        return layout_id

    def _compute_report(self, graph: LayoutGraph,
                        s_layout: Optional[float] = None) -> dict:
        plan = self.plan()
        try:
            report = evaluate_layout(graph, plan.story_meta,
                                     plan_extent=plan.extent(), s_layout=s_layout)
            return json.loads(report.to_json())
        except (InsufficientLateralSystem, EigenFailure, NonPositiveDefinite) as exc:
            n_column, n_short, l_wall = compute_geometric_metrics(graph)
            return {
                "schema": "wallforge.report/1",
                "error": type(exc).__name__,
                "detail": str(exc),
                "n_column": n_column, "n_short": n_short, "l_wall": l_wall,
                "drift_reciprocal": None, "r_torsion": None, "r_period": None,
                "s_layout": s_layout, "flags": {}, "assumptions": [],
            }

    def _store_report(self, layout_id: str) -> str:
        graph = self.layout(layout_id)
        scores = self.manifest["scores"].get(layout_id, {})
        mean = round(sum(scores.values()) / len(scores), 2) if scores else None
        report = self._compute_report(graph, s_layout=mean)
        rel = self._fresh(f"reports/{layout_id}", "json")
        self.store.write_text(rel, json.dumps(report, indent=2, sort_keys=True))
        self.manifest["reports"][layout_id] = rel
        return rel

    def apply_edit(self, layout_id: str, edit: dict) -> Tuple[str, dict]:
        """Create an immutable child layout with the edit applied.

        Returns (new_layout_id, report). The parent layout is untouched;
        metric reports are recomputed synchronously.
        """
        parent_graph = self.layout(layout_id)
        new_graph = apply_graph_edit(parent_graph, edit)
        with self.store.locked():
            child_id = self._store_layout(new_graph, parent=layout_id)
            rel = self._store_report(child_id)
            self._commit()
        return child_id, json.loads(self.store.read_text(rel))

    def record_score(self, layout_id: str, critic_id: str, score: float) -> dict:
        """Record one critic's 0-10 score (overwrite on repeat); returns
        {"scores": ..., "mean": ...}."""
        if layout_id not in self.manifest["layouts"]:
            raise UnknownLayout(f"no layout {layout_id!r}")
        if not (0.0 <= score <= 10.0):
            raise OutOfRange(f"score {score} outside [0, 10]")
        with self.store.locked():
            per_layout = self.manifest["scores"].setdefault(layout_id, {})
            per_layout[str(critic_id)] = float(score)
            if layout_id in self.manifest["reports"]:
                self._store_report(layout_id)   # refresh s_layout in the report
            self._commit()
        scores = self.manifest["scores"][layout_id]
        return {"scores": dict(scores),
                "mean": round(sum(scores.values()) / len(scores), 2)}

    def set_preferred(self, set_idx: int, cand_id: int) -> None:
        with self.store.locked():
            self.manifest["preferred"] = {"set": set_idx, "candidate": cand_id}
            self._commit()

    def quick_metrics(self, set_idx: int, cand_id: int) -> dict:
        """Cheap gallery metrics: vectorize and count, no solver run."""
        raster = self._candidate_raster(set_idx, cand_id)
        graph = vectorize_raster(raster, despeckle=True)
        n_column, n_short, l_wall = compute_geometric_metrics(graph)
        return {"n_column": n_column, "n_short": n_short, "l_wall": l_wall}


def apply_graph_edit(graph: LayoutGraph, edit: dict) -> LayoutGraph:
    """Pure edit application; validates WallLimb and graph invariants."""
    kind = edit.get("kind")
    if kind not in EDIT_KINDS:
        raise InvalidGeometry(f"unknown edit kind {kind!r}")
    limbs = list(graph.limbs)
    if kind == "AddLimb":
        limbs.append(_limb_from_edit(edit, component_id=_next_component(limbs)))
    else:
        index = int(edit.get("index", -1))
        if not (0 <= index < len(limbs)):
            raise InvalidGeometry(f"limb index {index} out of range")
        if kind == "RemoveLimb":
            limbs.pop(index)
        elif kind == "MoveLimb":
            dx, dy = int(edit["dx"]), int(edit["dy"])
            old = limbs[index]
            limbs[index] = WallLimb(
                (old.centerline[0].translated(dx, dy),
                 old.centerline[1].translated(dx, dy)),
                old.thickness, old.component_id)
        elif kind == "ResizeLimb":
            old = limbs[index]
            limbs[index] = _limb_from_edit(edit, component_id=old.component_id)
    new_graph = LayoutGraph(
        limbs=limbs, junctions=rebuild_junctions(limbs), columns=list(graph.columns),
        source=f"edit:{kind}", scale=graph.scale)
    new_graph.validate()
    return new_graph


def _next_component(limbs: List[WallLimb]) -> int:
    return max((l.component_id for l in limbs), default=-1) + 1


def _limb_from_edit(edit: dict, component_id: int) -> WallLimb:
    from .vectorize import STANDARD_THICKNESS
    try:
        (x0, y0), (x1, y1) = edit["centerline"]
        thickness = int(edit["thickness"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidGeometry(f"bad limb payload: {exc}")
    if thickness not in STANDARD_THICKNESS:
        raise InvalidGeometry(
            f"thickness {thickness} not in standard set {STANDARD_THICKNESS}")
    return WallLimb((Point2(int(x0), int(y0)), Point2(int(x1), int(y1))),
                    thickness, component_id)
