"""REST API for the review UI.

All routes sit under /api/v1. Responses are JSON except candidate/layout
PNGs. Long-running generation runs as a background job with polled status so
reads never block. Domain errors map onto HTTP statuses:
UnknownLayout -> 404, OutOfRange / InvalidGeometry -> 422,
DependencyMissing / DuplicateName -> 409, other domain errors -> 400.
"""

from __future__ import annotations

import base64
import threading
import uuid
from pathlib import Path
from typing import Dict, Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import (DependencyMissing, DuplicateName, InvalidGeometry, OutOfRange,
                     UnknownLayout, WallforgeError)
from .plan import LayerMap, StoryMeta
from .project import PipelineStep, Project
from .sdclient import Transport

_STATUS = {
    UnknownLayout: 404,
    OutOfRange: 422,
    InvalidGeometry: 422,
    DependencyMissing: 409,
    DuplicateName: 409,
}


class CreateProjectBody(BaseModel):
    name: str
    dxf_b64: str
    layers_config: str
    story_height: int = 3000
    num_stories: int = 1
    seismic_label: str = ""


class StepBody(BaseModel):
    kind: str
    params: dict = {}


class EditBody(BaseModel):
    kind: str
    index: Optional[int] = None
    centerline: Optional[list] = None
    thickness: Optional[int] = None
    dx: Optional[int] = None
    dy: Optional[int] = None


class ScoreBody(BaseModel):
    critic: str
    score: float


class GenerateBody(BaseModel):
    params: dict = {}


class JobRegistry:
    """In-process background jobs (generation) with polled status."""

    def __init__(self):
        self._jobs: Dict[str, dict] = {}
        self._lock = threading.Lock()

    def start(self, fn) -> str:
        job_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._jobs[job_id] = {"status": "running", "result": None, "error": None}

        def _run():
            try:
                result = fn()
                with self._lock:
                    self._jobs[job_id].update(status="done", result=result)
            except Exception as exc:
                with self._lock:
                    self._jobs[job_id].update(status="error", error=str(exc))

        threading.Thread(target=_run, daemon=True).start()
        return job_id

    def get(self, job_id: str) -> Optional[dict]:
        with self._lock:
            job = self._jobs.get(job_id)
            return dict(job) if job else None


def create_app(root: Path, transport: Optional[Transport] = None) -> FastAPI:
    """Build the API app for a project root; transport overrides the real
    diffusion HTTP client (transcript replay in tests)."""
    root = Path(root)
    app = FastAPI(title="wallforge", version="1")
    jobs = JobRegistry()

    @app.exception_handler(WallforgeError)
    async def _domain_error(request: Request, exc: WallforgeError):
        status = next((code for cls, code in _STATUS.items() if isinstance(exc, cls)), 400)
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    def _project(name: str) -> Project:
        try:
            return Project.load(root, name)
        except FileNotFoundError:
            raise UnknownLayout(f"no project {name!r}")

    @app.get("/api/v1/projects")
    def list_projects():
        return Project.list_projects(root)

    @app.post("/api/v1/projects", status_code=201)
    def create_project(body: CreateProjectBody):
        layer_map = LayerMap.from_config_text(body.layers_config)
        meta = StoryMeta(story_height=body.story_height, num_stories=body.num_stories,
                         seismic_label=body.seismic_label)
        project = Project.create(root, body.name, base64.b64decode(body.dxf_b64),
                                 layer_map, meta)
        return {"name": project.name}

    @app.get("/api/v1/projects/{name}")
    def get_project(name: str):
        return _project(name).manifest

    @app.get("/api/v1/projects/{name}/plan")
    def get_plan(name: str):
        import json as _json
        project = _project(name)
        return _json.loads(project.store.read_text(project.manifest["plan"]))

    @app.post("/api/v1/projects/{name}/steps")
    def run_step(name: str, body: StepBody):
        project = _project(name)
        step = project.run_step(PipelineStep(kind=body.kind, params=body.params),
                                transport=transport)
        return {"kind": step.kind, "status": step.status, "outputs": step.outputs}

    @app.post("/api/v1/projects/{name}/generate", status_code=202)
    def generate(name: str, body: GenerateBody):
        def _run():
            project = _project(name)
            step = project.run_step(PipelineStep(kind="Generate", params=body.params),
                                    transport=transport)
            return {"outputs": step.outputs}

        return {"job": jobs.start(_run)}

    @app.get("/api/v1/projects/{name}/jobs/{job_id}")
    def job_status(name: str, job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise UnknownLayout(f"no job {job_id!r}")
        return job

    @app.get("/api/v1/projects/{name}/candidates")
    def list_candidates(name: str, quick_metrics: bool = False):
        project = _project(name)
        sets = []
        for cs in project.manifest["candidate_sets"]:
            entry = {"set": cs["set"], "params": cs["params"], "candidates": []}
            for cand in cs["candidates"]:
                item = {"id": cand["id"], "seed": cand["seed"], "file": cand["file"]}
                if quick_metrics:
                    item["quick_metrics"] = project.quick_metrics(cs["set"], cand["id"])
                entry["candidates"].append(item)
            sets.append(entry)
        return sets

    @app.get("/api/v1/projects/{name}/candidates/{set_idx}/{cand_id}/png")
    def candidate_png(name: str, set_idx: int, cand_id: int):
        project = _project(name)
        for cs in project.manifest["candidate_sets"]:
            if cs["set"] == set_idx:
                for cand in cs["candidates"]:
                    if cand["id"] == cand_id:
                        return Response(project.store.read_bytes(cand["file"]),
                                        media_type="image/png")
        raise UnknownLayout(f"no candidate {set_idx}/{cand_id}")

    @app.post("/api/v1/projects/{name}/candidates/{set_idx}/{cand_id}/preferred")
    def set_preferred(name: str, set_idx: int, cand_id: int):
        project = _project(name)
        project.set_preferred(set_idx, cand_id)
        return {"preferred": {"set": set_idx, "candidate": cand_id}}

    @app.get("/api/v1/projects/{name}/layouts")
    def list_layouts(name: str):
        project = _project(name)
        return [
            {"id": lid, **project.manifest["layouts"][lid],
             "has_report": lid in project.manifest["reports"]}
            for lid in project.layout_ids()
        ]

    @app.get("/api/v1/projects/{name}/layouts/{layout_id}")
    def get_layout(name: str, layout_id: str):
        import json as _json
        project = _project(name)
        meta = project.manifest["layouts"].get(layout_id)
        if meta is None:
            raise UnknownLayout(f"no layout {layout_id!r}")
        doc = _json.loads(project.store.read_text(meta["file"]))
        doc["id"] = layout_id
        doc["parent"] = meta.get("parent")
        return doc

    @app.post("/api/v1/projects/{name}/layouts/{layout_id}/edits", status_code=201)
    def apply_edit(name: str, layout_id: str, body: EditBody):
        project = _project(name)
        edit = {k: v for k, v in body.model_dump().items() if v is not None}
        child_id, report = project.apply_edit(layout_id, edit)
        return {"layout_id": child_id, "parent": layout_id, "report": report}

    @app.get("/api/v1/projects/{name}/layouts/{layout_id}/metrics")
    def get_metrics(name: str, layout_id: str):
        project = _project(name)
        if layout_id not in project.manifest["layouts"]:
            raise UnknownLayout(f"no layout {layout_id!r}")
        report = project.report(layout_id)
        if report is None:
            project._step_evaluate({"layout": layout_id})
            with project.store.locked():
                project._commit()
            report = project.report(layout_id)
        return report

    @app.post("/api/v1/projects/{name}/layouts/{layout_id}/score")
    def record_score(name: str, layout_id: str, body: ScoreBody):
        project = _project(name)
        return project.record_score(layout_id, body.critic, body.score)

    return app


def serve_api(root: Path, host: str = "127.0.0.1", port: int = 8008,
              transport: Optional[Transport] = None) -> None:
    """Blocking server entry point used by the CLI."""
    import uvicorn

    from .errors import BindFailure
    app = create_app(root, transport=transport)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}")
