"""Command-line interface.

Exit codes: 0 success, 1 domain error, 2 usage error (click's default).
The project root defaults to ./wallforge-projects; the diffusion endpoint
falls back to the WALLFORGE_SD_URL environment variable.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import WallforgeError
from .metrics import MetricReport, render_report_table
from .plan import LayerMap, StoryMeta
from .project import PipelineStep, Project
from .sdclient import TranscriptTransport

DEFAULT_ROOT = "wallforge-projects"


def _fail(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _load(root: str, name: str) -> Project:
    try:
        return Project.load(Path(root), name)
    except FileNotFoundError:
        _fail(f"no project {name!r} under {root}")


@click.group()
def main():
    """Shear-wall layout studio."""


@main.command()
@click.argument("dxf", type=click.Path(exists=True, dir_okay=False))
@click.option("--layers", required=True, type=click.Path(exists=True, dir_okay=False),
              help="layer-map config file")
@click.option("--project", "name", required=True, help="project name")
@click.option("--root", default=DEFAULT_ROOT, show_default=True)
@click.option("--story-height", default=3000, show_default=True)
@click.option("--stories", default=1, show_default=True)
@click.option("--label", default="", help="seismic subcategory label")
def ingest(dxf, layers, name, root, story_height, stories, label):
    """Parse a DXF floor plan into a new project."""
    try:
        layer_map = LayerMap.from_config_text(Path(layers).read_text())
        meta = StoryMeta(story_height=story_height, num_stories=stories,
                         seismic_label=label)
        project = Project.create(Path(root), name, Path(dxf).read_bytes(),
                                 layer_map, meta)
    except (WallforgeError, ValueError) as exc:
        _fail(exc)
    click.echo(f"created project {project.name}")


def _run(project: Project, kind: str, params: dict, transport=None):
    try:
        step = project.run_step(PipelineStep(kind=kind, params=params),
                                transport=transport)
    except WallforgeError as exc:
        _fail(exc)
    for out in step.outputs:
        click.echo(out)


@main.command()
@click.option("--project", "name", required=True)
@click.option("--root", default=DEFAULT_ROOT, show_default=True)
@click.option("--canvas", default=512, show_default=True)
@click.option("--scale", default=100, show_default=True)
def rasterize(name, root, canvas, scale):
    """Render the plan to semantic rasters."""
    _run(_load(root, name), "Rasterize", {"canvas": canvas, "scale": scale})


@main.group()
def dataset():
    """Training-set commands."""


@dataset.command("build")
@click.option("--project", "name", required=True)
@click.option("--root", default=DEFAULT_ROOT, show_default=True)
@click.option("--caption", default="Shear Wall Layout", show_default=True)
def dataset_build(name, root, caption):
    """Emit the training pairs, captions and trainer config."""
    _run(_load(root, name), "BuildDataset", {"caption": caption})


@main.command()
@click.option("--project", "name", required=True)
@click.option("--root", default=DEFAULT_ROOT, show_default=True)
@click.option("--api", "api_url", default=None,
              help="diffusion endpoint (default: WALLFORGE_SD_URL)")
@click.option("--lora", default="", help="LoRA model name")
@click.option("--batch", default=4, show_default=True)
@click.option("--seed", default="random", show_default=True)
@click.option("--prompt", default="Shear Wall Layout", show_default=True)
@click.option("--transcript", type=click.Path(exists=True, dir_okay=False),
              help="replay a recorded transcript instead of calling the API")
def generate(name, root, api_url, lora, batch, seed, prompt, transcript):
    """Request candidate layouts from the diffusion endpoint."""
    transport = TranscriptTransport.load(transcript) if transcript else None
    params = {"lora": lora, "batch": batch, "seed": seed, "prompt": prompt}
    if api_url:
        params["api_url"] = api_url
    _run(_load(root, name), "Generate", params, transport=transport)


@main.command()
@click.argument("candidate")
@click.option("--project", "name", required=True)
@click.option("--root", default=DEFAULT_ROOT, show_default=True)
def vectorize(candidate, name, root):
    """Vectorize CANDIDATE (form: set/id, e.g. 0/2) into a layout."""
    try:
        set_idx, cand_id = (int(part) for part in candidate.split("/"))
    except ValueError:
        raise click.UsageError("candidate must look like SET/ID, e.g. 0/2")
    _run(_load(root, name), "Vectorize", {"set": set_idx, "candidate": cand_id})


@main.command()
@click.argument("layout")
@click.option("--project", "name", required=True)
@click.option("--root", default=DEFAULT_ROOT, show_default=True)
def evaluate(layout, name, root):
    """Compute the metric report for LAYOUT."""
    project = _load(root, name)
    _run(project, "Evaluate", {"layout": layout})
    report = project.report(layout)
    if report and not report.get("error"):
        click.echo(render_report_table(MetricReport.from_json(json.dumps(report))))
    elif report:
        click.echo(f"structural analysis failed: {report['error']} ({report['detail']})")


@main.command()
@click.argument("layout")
@click.option("--project", "name", required=True)
@click.option("--root", default=DEFAULT_ROOT, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["s2k", "json", "png"]),
              default="json", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="copy the export here as well")
def export(layout, name, root, fmt, out):
    """Export LAYOUT for external tools."""
    project = _load(root, name)
    _run(project, "Export", {"layout": layout, "format": fmt})
    if out:
        rel = project.manifest["exports"][-1]
        Path(out).write_bytes(project.store.read_bytes(rel))
        click.echo(f"wrote {out}")


@main.command()
@click.option("--port", default=8008, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--root", default=DEFAULT_ROOT, show_default=True)
def serve(port, host, root):
    """Serve the review-UI REST API."""
    from .api import serve_api
    try:
        serve_api(Path(root), host=host, port=port)
    except WallforgeError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
