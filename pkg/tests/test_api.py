import base64
import json
import time

import pytest
from fastapi.testclient import TestClient

from test_project import generate_transcript
from wallforge.api import create_app
from wallforge.plan import LayerMap
from wallforge.project import PipelineStep, Project


@pytest.fixture
def client(tmp_path):
    return TestClient(create_app(tmp_path))


@pytest.fixture
def populated(tmp_path, studio_dxf, layer_config_text):
    """A project with one candidate set, one vectorized + evaluated layout."""
    layer_map = LayerMap.from_config_text(layer_config_text)
    project = Project.create(tmp_path, "tower", studio_dxf, layer_map)
    project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
    transport = generate_transcript(project, batch=2)
    project.run_step(PipelineStep(kind="Generate",
                                  params={"api_url": "http://mock.local:7860",
                                          "seed": 42, "batch": 2}),
                     transport=transport)
    project.run_step(PipelineStep(kind="Vectorize", params={}))
    project.run_step(PipelineStep(kind="Evaluate"))
    return TestClient(create_app(tmp_path))


class TestProjects:
    def test_empty_root(self, client):
        response = client.get("/api/v1/projects")
        assert response.status_code == 200
        assert response.json() == []

    def test_create_and_list(self, client, studio_dxf, layer_config_text):
        body = {"name": "tower", "dxf_b64": base64.b64encode(studio_dxf).decode(),
                "layers_config": layer_config_text}
        response = client.post("/api/v1/projects", json=body)
        assert response.status_code == 201
        assert client.get("/api/v1/projects").json() == ["tower"]
        plan = client.get("/api/v1/projects/tower/plan").json()
        assert plan["schema"] == "wallforge.plan/1"
        assert len(plan["shear_walls"]) == 4

    def test_duplicate_name_409(self, client, studio_dxf, layer_config_text):
        body = {"name": "tower", "dxf_b64": base64.b64encode(studio_dxf).decode(),
                "layers_config": layer_config_text}
        assert client.post("/api/v1/projects", json=body).status_code == 201
        response = client.post("/api/v1/projects", json=body)
        assert response.status_code == 409
        assert response.json()["error"] == "DuplicateName"

    def test_unknown_project_404(self, client):
        assert client.get("/api/v1/projects/none/plan").status_code == 404


class TestCandidates:
    def test_gallery_listing_with_quick_metrics(self, populated):
        response = populated.get("/api/v1/projects/tower/candidates",
                                 params={"quick_metrics": "true"})
        assert response.status_code == 200
        (cand_set,) = response.json()
        assert len(cand_set["candidates"]) == 2
        for cand in cand_set["candidates"]:
            assert cand["seed"] in (42, 43)
            qm = cand["quick_metrics"]
            assert set(qm) == {"n_column", "n_short", "l_wall"}

    def test_candidate_png(self, populated):
        response = populated.get("/api/v1/projects/tower/candidates/0/0/png")
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/png"
        assert response.content[:4] == b"\x89PNG"

    def test_preferred_selection(self, populated):
        response = populated.post("/api/v1/projects/tower/candidates/0/1/preferred")
        assert response.status_code == 200
        manifest = populated.get("/api/v1/projects/tower").json()
        assert manifest["preferred"] == {"set": 0, "candidate": 1}


class TestLayoutsAndMetrics:
    def test_layout_listing(self, populated):
        layouts = populated.get("/api/v1/projects/tower/layouts").json()
        assert layouts[0]["id"] == "L0000"
        assert layouts[0]["has_report"] is True

    def test_metrics_schema(self, populated):
        report = populated.get("/api/v1/projects/tower/layouts/L0000/metrics").json()
        assert set(report) == {
            "schema", "drift_reciprocal", "r_torsion", "r_period",
            "n_column", "n_short", "l_wall", "s_layout", "flags", "assumptions"}
        assert set(report["flags"]) == {"drift", "torsion", "period"}

    def test_metrics_evaluated_lazily(self, populated):
        child = populated.post("/api/v1/projects/tower/layouts/L0000/edits",
                               json={"kind": "MoveLimb", "index": 0,
                                     "dx": 100, "dy": 0}).json()
        report = populated.get(
            f"/api/v1/projects/tower/layouts/{child['layout_id']}/metrics").json()
        assert report["l_wall"] > 0

    def test_edit_returns_child_and_report(self, populated):
        response = populated.post(
            "/api/v1/projects/tower/layouts/L0000/edits",
            json={"kind": "AddLimb", "centerline": [[2000, 8000], [4000, 8000]],
                  "thickness": 200})
        assert response.status_code == 201
        body = response.json()
        assert body["parent"] == "L0000"
        assert body["report"]["l_wall"] > 0

    def test_invalid_edit_422(self, populated):
        response = populated.post(
            "/api/v1/projects/tower/layouts/L0000/edits",
            json={"kind": "AddLimb", "centerline": [[0, 0], [2000, 0]],
                  "thickness": 170})
        assert response.status_code == 422

    def test_unknown_layout_404(self, populated):
        response = populated.get("/api/v1/projects/tower/layouts/L9999/metrics")
        assert response.status_code == 404


class TestScores:
    def test_record_and_mean(self, populated):
        populated.post("/api/v1/projects/tower/layouts/L0000/score",
                       json={"critic": "c1", "score": 7.0})
        populated.post("/api/v1/projects/tower/layouts/L0000/score",
                       json={"critic": "c2", "score": 8.0})
        response = populated.post("/api/v1/projects/tower/layouts/L0000/score",
                                  json={"critic": "c3", "score": 5.0})
        assert response.status_code == 200
        assert response.json()["mean"] == 6.67

    def test_score_out_of_range_422(self, populated):
        response = populated.post("/api/v1/projects/tower/layouts/L0000/score",
                                  json={"critic": "c1", "score": 11})
        assert response.status_code == 422
        assert response.json()["error"] == "OutOfRange"

    def test_score_recorded_in_report(self, populated):
        populated.post("/api/v1/projects/tower/layouts/L0000/score",
                       json={"critic": "c1", "score": 7.0})
        report = populated.get("/api/v1/projects/tower/layouts/L0000/metrics").json()
        assert report["s_layout"] == 7.0


class TestGenerateJob:
    def test_background_generation(self, tmp_path, studio_dxf, layer_config_text):
        layer_map = LayerMap.from_config_text(layer_config_text)
        project = Project.create(tmp_path, "tower", studio_dxf, layer_map)
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        transport = generate_transcript(project, batch=2)
        client = TestClient(create_app(tmp_path, transport=transport))
        response = client.post("/api/v1/projects/tower/generate",
                               json={"params": {"api_url": "http://mock.local:7860",
                                                "seed": 42, "batch": 2}})
        assert response.status_code == 202
        job = response.json()["job"]
        for _ in range(100):
            status = client.get(f"/api/v1/projects/tower/jobs/{job}").json()
            if status["status"] != "running":
                break
            time.sleep(0.05)
        assert status["status"] == "done"
        sets = client.get("/api/v1/projects/tower/candidates").json()
        assert len(sets) == 1 and len(sets[0]["candidates"]) == 2
