import base64
import hashlib
import json
from pathlib import Path

import pytest

from wallforge.errors import (DependencyMissing, DuplicateName, InvalidGeometry,
                              MalformedDxf, OutOfRange, UnknownLayout)
from wallforge.plan import LayerMap
from wallforge.project import CrashInjected, PipelineStep, Project
from wallforge.raster import PaletteClass, blank_raster, decode_png, encode_png
from wallforge.sdclient import TranscriptTransport, build_img2img_payload


@pytest.fixture
def layer_map(layer_config_text):
    return LayerMap.from_config_text(layer_config_text)


@pytest.fixture
def project(tmp_path, studio_dxf, layer_map):
    return Project.create(tmp_path, "tower-a", studio_dxf, layer_map)


def candidate_b64(canvas=128):
    """A palette-exact candidate: two X walls and one Y wall (torsionally
    stable, but removing the Y wall kills that direction)."""
    raster = blank_raster(canvas, 100)
    raster.pixels[60:62, 30:70] = int(PaletteClass.ShearWall)   # X wall, 4 m
    raster.pixels[20:22, 30:70] = int(PaletteClass.ShearWall)   # X wall, 4 m
    raster.pixels[26:56, 30:32] = int(PaletteClass.ShearWall)   # Y wall, 3 m
    return base64.b64encode(encode_png(raster)).decode()


def generate_transcript(project, batch=4, seed=42):
    """Transcript matching exactly what the Generate step will send."""
    from wallforge.sdclient import GenerationRequest
    rasters = project.manifest["rasters"]
    condition = decode_png(project.store.read_bytes(rasters["condition"]),
                           scale=rasters["scale"])
    req = GenerationRequest(prompt="Shear Wall Layout", condition_image=condition,
                            seed=seed, batch=batch)
    return TranscriptTransport([{
        "method": "POST", "url": "http://mock.local:7860/sdapi/v1/img2img",
        "request": build_img2img_payload(req), "status": 200,
        "response": {"images": [candidate_b64(condition.canvas) for _ in range(batch)],
                     "info": json.dumps({"all_seeds": [seed + i for i in range(batch)]})},
    }])


def run_generate(project, batch=4):
    transport = generate_transcript(project, batch=batch)
    return project.run_step(
        PipelineStep(kind="Generate",
                     params={"api_url": "http://mock.local:7860", "seed": 42,
                             "batch": batch}),
        transport=transport)


class TestCreate:
    def test_valid_dxf(self, project):
        assert project.plan().arch_walls
        assert len(project.plan().shear_walls) == 4

    def test_malformed_dxf_leaves_nothing(self, tmp_path, layer_map):
        with pytest.raises(MalformedDxf):
            Project.create(tmp_path, "bad", b"0\nSECTION\n", layer_map)
        assert not (tmp_path / "bad").exists()

    def test_duplicate_name(self, tmp_path, studio_dxf, layer_map):
        Project.create(tmp_path, "dup", studio_dxf, layer_map)
        with pytest.raises(DuplicateName):
            Project.create(tmp_path, "dup", studio_dxf, layer_map)

    def test_listing(self, tmp_path, studio_dxf, layer_map):
        assert Project.list_projects(tmp_path) == []
        Project.create(tmp_path, "one", studio_dxf, layer_map)
        assert Project.list_projects(tmp_path) == ["one"]


class TestSteps:
    def test_vectorize_before_generate(self, project):
        with pytest.raises(DependencyMissing):
            project.run_step(PipelineStep(kind="Vectorize"))

    def test_generate_requires_raster(self, project):
        with pytest.raises(DependencyMissing):
            project.run_step(PipelineStep(kind="Generate",
                                          params={"api_url": "http://x"}))

    def test_rasterize_then_generate_then_vectorize(self, project):
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        run_generate(project)
        assert len(project.manifest["candidate_sets"]) == 1
        project.run_step(PipelineStep(kind="Vectorize",
                                      params={"set": 0, "candidate": 1}))
        assert project.layout_ids() == ["L0000"]
        graph = project.layout("L0000")
        assert len(graph.limbs) == 3
        assert {l.axis for l in graph.limbs} == {"X", "Y"}

    def test_evaluate_all_candidates(self, project):
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        run_generate(project, batch=4)
        for cand in range(4):
            project.run_step(PipelineStep(kind="Vectorize",
                                          params={"set": 0, "candidate": cand}))
        project.run_step(PipelineStep(kind="Evaluate"))
        assert len(project.manifest["reports"]) == 4
        report = project.report("L0000")
        assert report["n_short"] >= 0 and "flags" in report

    def test_dataset_step(self, project):
        project.run_step(PipelineStep(kind="BuildDataset",
                                      params={"caption": "Shear Wall Layout"}))
        info = project.manifest["dataset"]
        assert info["trainer_config"]["epochs"] == 20
        assert info["trainer_config"]["steps_per_epoch"] == 100
        assert (project.store.directory / info["dir"] / "manifest.json").exists()

    def test_export_step(self, project):
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        run_generate(project)
        project.run_step(PipelineStep(kind="Vectorize", params={}))
        step = project.run_step(PipelineStep(kind="Export",
                                             params={"layout": "L0000", "format": "json"}))
        (out,) = step.outputs
        assert out.startswith("exports/L0000") and out.endswith(".json")
        assert (project.store.directory / out).exists()

    def test_generate_endpoint_from_env(self, project, monkeypatch):
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        monkeypatch.setenv("WALLFORGE_SD_URL", "http://mock.local:7860")
        transport = generate_transcript(project, batch=1)
        step = project.run_step(
            PipelineStep(kind="Generate", params={"seed": 42, "batch": 1}),
            transport=transport)
        assert len(step.outputs) == 1

    def test_failed_step_keeps_manifest(self, project, tmp_path):
        before = (project.store.directory / "project.json").read_text()
        with pytest.raises(DependencyMissing):
            project.run_step(PipelineStep(kind="Vectorize"))
        after = (project.store.directory / "project.json").read_text()
        assert before == after


class TestScores:
    def test_mean(self, project):
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        run_generate(project, batch=1)
        project.run_step(PipelineStep(kind="Vectorize", params={}))
        project.record_score("L0000", "critic-1", 7.0)
        project.record_score("L0000", "critic-2", 8.0)
        result = project.record_score("L0000", "critic-3", 5.0)
        assert result["mean"] == 6.67

    def test_overwrite_per_critic(self, project):
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        run_generate(project, batch=1)
        project.run_step(PipelineStep(kind="Vectorize", params={}))
        project.record_score("L0000", "critic-1", 3.0)
        result = project.record_score("L0000", "critic-1", 9.0)
        assert result == {"scores": {"critic-1": 9.0}, "mean": 9.0}

    def test_out_of_range(self, project):
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        run_generate(project, batch=1)
        project.run_step(PipelineStep(kind="Vectorize", params={}))
        with pytest.raises(OutOfRange):
            project.record_score("L0000", "critic-1", 11)

    def test_unknown_layout(self, project):
        with pytest.raises(UnknownLayout):
            project.record_score("L9999", "critic-1", 5)

    def test_fig12_style_aggregation(self, project):
        """Column mean over many critics reproduces arithmetic aggregation."""
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        run_generate(project, batch=1)
        project.run_step(PipelineStep(kind="Vectorize", params={}))
        scores = [6.0, 7.0, 5.0, 6.2, 8.0, 6.0, 4.0, 6.0, 6.0, 5.5]
        for i, s in enumerate(scores):
            result = project.record_score("L0000", f"critic-{i}", s)
        assert result["mean"] == round(sum(scores) / len(scores), 2)


class TestEdits:
    @pytest.fixture
    def evaluated(self, project):
        project.run_step(PipelineStep(kind="Rasterize", params={"canvas": 128}))
        run_generate(project, batch=1)
        project.run_step(PipelineStep(kind="Vectorize", params={}))
        project.run_step(PipelineStep(kind="Evaluate"))
        return project

    def test_add_limb_bounded_increase(self, evaluated):
        parent_report = evaluated.report("L0000")
        child_id, report = evaluated.apply_edit("L0000", {
            "kind": "AddLimb", "centerline": [[2000, 8000], [4000, 8000]],
            "thickness": 200})
        assert child_id == "L0001"
        delta = report["l_wall"] - parent_report["l_wall"]
        assert 0 < delta <= 2.0 + 1e-9

    def test_parent_untouched(self, evaluated):
        before = evaluated.layout("L0000")
        evaluated.apply_edit("L0000", {
            "kind": "AddLimb", "centerline": [[2000, 8000], [4000, 8000]],
            "thickness": 200})
        after = evaluated.layout("L0000")
        assert [l.centerline for l in before.limbs] == [l.centerline for l in after.limbs]
        assert evaluated.manifest["layouts"]["L0001"]["parent"] == "L0000"

    def test_remove_last_y_limb_records_error_report(self, evaluated):
        graph = evaluated.layout("L0000")
        y_index = next(i for i, l in enumerate(graph.limbs) if l.axis == "Y")
        child_id, report = evaluated.apply_edit("L0000", {"kind": "RemoveLimb",
                                                          "index": y_index})
        assert report["error"] == "InsufficientLateralSystem"
        assert child_id in evaluated.manifest["layouts"]
        assert report["l_wall"] > 0

    def test_move_there_and_back_identical_metrics(self, evaluated):
        base = evaluated.report("L0000")
        mid_id, _ = evaluated.apply_edit("L0000", {"kind": "MoveLimb", "index": 0,
                                                   "dx": 100, "dy": 0})
        back_id, report = evaluated.apply_edit(mid_id, {"kind": "MoveLimb", "index": 0,
                                                        "dx": -100, "dy": 0})
        for key in ("drift_reciprocal", "r_torsion", "r_period",
                    "n_column", "n_short", "l_wall"):
            assert report[key] == pytest.approx(base[key], rel=1e-12)

    def test_invalid_thickness_rejected(self, evaluated):
        with pytest.raises(InvalidGeometry):
            evaluated.apply_edit("L0000", {
                "kind": "AddLimb", "centerline": [[0, 0], [2000, 0]],
                "thickness": 170})

    def test_lineage_is_forest(self, evaluated):
        a, _ = evaluated.apply_edit("L0000", {"kind": "MoveLimb", "index": 0,
                                              "dx": 100, "dy": 0})
        b, _ = evaluated.apply_edit(a, {"kind": "MoveLimb", "index": 0,
                                        "dx": 100, "dy": 0})
        reloaded = Project.load(evaluated.store.directory.parent, "tower-a")
        assert reloaded.manifest["layouts"][b]["parent"] == a
        assert reloaded.manifest["layouts"][a]["parent"] == "L0000"


def project_snapshot(root: Path, name: str):
    """Manifest text plus digests of every file it references."""
    directory = Path(root) / name
    manifest_text = (directory / "project.json").read_text()
    doc = json.loads(manifest_text)
    paths = set()

    def collect(node):
        if isinstance(node, str) and (
                "/" in node or node.endswith(".json") or node.endswith(".png")):
            if (directory / node).is_file():
                paths.add(node)
        elif isinstance(node, dict):
            for v in node.values():
                collect(v)
        elif isinstance(node, list):
            for v in node:
                collect(v)

    collect(doc)
    digests = {p: hashlib.sha256((directory / p).read_bytes()).hexdigest()
               for p in sorted(paths)}
    return manifest_text, digests


class TestCrashConsistency:
    def _sequence(self, project):
        """The scripted mutation sequence used for fault injection
        (>= 100 persistence hook points end to end)."""
        yield lambda: project.run_step(PipelineStep(kind="Rasterize",
                                                    params={"canvas": 128}))
        yield lambda: run_generate(project, batch=2)
        yield lambda: project.run_step(PipelineStep(kind="Vectorize", params={}))
        yield lambda: project.run_step(PipelineStep(kind="Evaluate"))
        yield lambda: project.apply_edit("L0000", {
            "kind": "AddLimb", "centerline": [[2000, 8000], [4000, 8000]],
            "thickness": 200})
        yield lambda: project.record_score("L0001", "critic-1", 7.0)
        yield lambda: project.record_score("L0001", "critic-2", 8.0)
        yield lambda: project.apply_edit("L0001", {"kind": "MoveLimb", "index": 0,
                                                   "dx": 100, "dy": 0})
        yield lambda: project.apply_edit("L0002", {"kind": "MoveLimb", "index": 0,
                                                   "dx": -100, "dy": 0})
        yield lambda: project.record_score("L0003", "critic-1", 6.0)
        yield lambda: project.apply_edit("L0003", {"kind": "RemoveLimb", "index": 2})
        yield lambda: project.run_step(PipelineStep(
            kind="Export", params={"layout": "L0001", "format": "json"}))
        yield lambda: project.run_step(PipelineStep(
            kind="Export", params={"layout": "L0001", "format": "s2k"}))
        yield lambda: project.set_preferred(0, 1)
        yield lambda: project.record_score("L0004", "critic-3", 5.5)

    def test_injected_interruptions(self, tmp_path, studio_dxf, layer_map):
        # reference run records the consistent checkpoints
        Project.create(tmp_path / "ref", "p", studio_dxf, layer_map)
        ref = Project.load(tmp_path / "ref", "p")
        checkpoints = [project_snapshot(tmp_path / "ref", "p")]
        for action in self._sequence(ref):
            action()
            checkpoints.append(project_snapshot(tmp_path / "ref", "p"))

        injections_seen = 0
        for k in range(1, 101):
            root = tmp_path / f"run{k}"
            Project.create(root, "p", studio_dxf, layer_map)
            project = Project.load(root, "p")
            counter = {"n": 0}

            def hook(phase, rel):
                counter["n"] += 1
                if counter["n"] == k:
                    raise CrashInjected(f"injected at op {k} ({phase} {rel})")

            project.store.hook = hook
            crashed_at = None
            try:
                for i, action in enumerate(self._sequence(project)):
                    action()
            except CrashInjected:
                crashed_at = i
                injections_seen += 1
            project.store.hook = None

            snap = project_snapshot(root, "p")
            if crashed_at is None:
                assert snap == checkpoints[-1]
            else:
                assert snap in (checkpoints[crashed_at], checkpoints[crashed_at + 1]), \
                    f"injection {k} left an inconsistent state"
            # and the project still loads
            Project.load(root, "p")
        assert injections_seen == 100, "sequence must span 100 interruption points"
