"""LoRA training-set construction: paired rasters, captions, trainer config.

Dataset layout (the external GUI trainer's image+caption convention):

    <out_dir>/
      img/1_<label_slug>/NNNN.png    target raster (architecture + shear walls)
      img/1_<label_slug>/NNNN.txt    caption sidecar, UTF-8
      cond/NNNN.png                  condition raster (architecture only)
      manifest.json                  every file with sha256
      trainer_config.txt             key-value config for the trainer GUI

Pairs are numbered 0000.. in input order.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .errors import InvalidOverride, IoFailure, NoShearWalls
from .plan import FloorPlan
from .raster import DEFAULT_CANVAS, DEFAULT_SCALE, SemanticRaster, encode_png, rasterize_plan

MIN_RECOMMENDED_PAIRS = 40   # below this the builder warns (small-set guidance)

DEFAULT_EPOCHS = 20
DEFAULT_STEPS_PER_EPOCH = 100


@dataclass
class TrainingPair:
    condition: SemanticRaster    # architecture only
    target: SemanticRaster       # architecture + shear walls
    caption: str


@dataclass
class TrainerConfig:
    epochs: int = DEFAULT_EPOCHS
    steps_per_epoch: int = DEFAULT_STEPS_PER_EPOCH
    image_size: int = DEFAULT_CANVAS
    label: str = "Shear Wall Layout"
    output_name: str = "shear_wall_lora"

    def __post_init__(self):
        if self.epochs < 1 or self.steps_per_epoch < 1:
            raise InvalidOverride("epochs and steps_per_epoch must be >= 1")


@dataclass
class DatasetManifest:
    num_pairs: int
    caption: str
    canvas: int
    scale: int
    files: Dict[str, str]            # relative path -> sha256
    warnings: List[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "schema": "wallforge.dataset/1",
            "num_pairs": self.num_pairs,
            "caption": self.caption,
            "canvas": self.canvas,
            "scale": self.scale,
            "files": dict(sorted(self.files.items())),
            "warnings": self.warnings,
        }, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        doc = json.loads(text)
        return DatasetManifest(
            num_pairs=doc["num_pairs"], caption=doc["caption"],
            canvas=doc["canvas"], scale=doc["scale"],
            files=doc["files"], warnings=doc.get("warnings", []),
        )


def build_training_pair(plan: FloorPlan, caption: str,
                        canvas: int = DEFAULT_CANVAS,
                        scale: int = DEFAULT_SCALE) -> TrainingPair:
    """Condition/target raster pair for one plan. Raises NoShearWalls."""
    if not plan.shear_walls:
        raise NoShearWalls("plan has no shear walls to learn from")
    condition = rasterize_plan(plan, include_shear=False, canvas=canvas, scale=scale)
    target = rasterize_plan(plan, include_shear=True, canvas=canvas, scale=scale)
    return TrainingPair(condition=condition, target=target, caption=caption)


def _slug(text: str) -> str:
    s = re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_").lower()
    return s or "dataset"


def build_dataset(plans: Sequence[FloorPlan], caption: str, out_dir: Path,
                  canvas: int = DEFAULT_CANVAS, scale: int = DEFAULT_SCALE) -> DatasetManifest:
    """Emit every pair plus manifest under out_dir. Warns (not errors) below 40 pairs."""
    if not plans:
        raise ValueError("need at least one plan")
    out_dir = Path(out_dir)
    img_dir = out_dir / "img" / f"1_{_slug(caption)}"
    cond_dir = out_dir / "cond"
    try:
        img_dir.mkdir(parents=True, exist_ok=True)
        cond_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(exc))

    files: Dict[str, str] = {}

    def _write(rel: str, data: bytes):
        path = out_dir / rel
        try:
            path.write_bytes(data)
        except OSError as exc:
            raise IoFailure(f"{path}: {exc}")
        files[rel] = hashlib.sha256(data).hexdigest()

    for i, plan in enumerate(plans):
        pair = build_training_pair(plan, caption, canvas=canvas, scale=scale)
        stem = f"{i:04d}"
        _write(f"img/1_{_slug(caption)}/{stem}.png", encode_png(pair.target))
        _write(f"img/1_{_slug(caption)}/{stem}.txt", pair.caption.encode("utf-8"))
        _write(f"cond/{stem}.png", encode_png(pair.condition))

    warnings = []
    if len(plans) < MIN_RECOMMENDED_PAIRS:
        warnings.append(
            f"only {len(plans)} pairs; around forty to fifty are recommended "
            f"for stable fine-tuning")
    manifest = DatasetManifest(
        num_pairs=len(plans), caption=caption, canvas=canvas, scale=scale,
        files=files, warnings=warnings,
    )
    try:
        (out_dir / "manifest.json").write_text(manifest.to_json())
    except OSError as exc:
        raise IoFailure(str(exc))
    return manifest


def emit_trainer_config(manifest: DatasetManifest,
                        overrides: Optional[Dict[str, object]] = None,
                        out_path: Optional[Path] = None) -> TrainerConfig:
    """Merge field-wise overrides onto the defaults and write the config file.

    Defaults: epochs=20, steps_per_epoch=100, image_size = dataset canvas.
    Raises InvalidOverride on non-positive counts or unknown fields.
    """
    values = {
        "epochs": DEFAULT_EPOCHS,
        "steps_per_epoch": DEFAULT_STEPS_PER_EPOCH,
        "image_size": manifest.canvas,
        "label": manifest.caption,
        "output_name": f"{_slug(manifest.caption)}_lora",
    }
    for key, value in (overrides or {}).items():
        if key not in values:
            raise InvalidOverride(f"unknown trainer config field {key!r}")
        values[key] = value
    config = TrainerConfig(**values)
    if out_path is not None:
        out_path = Path(out_path)
        try:
            out_path.write_text(render_trainer_config(config))
        except OSError as exc:
            raise IoFailure(str(exc))
    return config


def render_trainer_config(config: TrainerConfig) -> str:
    """Key-value text the trainer GUI can ingest; one field per line."""
    return (
        f"epochs = {config.epochs}\n"
        f"steps_per_epoch = {config.steps_per_epoch}\n"
        f"image_size = {config.image_size}\n"
        f"label = {config.label}\n"
        f"output_name = {config.output_name}\n"
    )


def parse_trainer_config(text: str) -> TrainerConfig:
    values: Dict[str, object] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = int(value) if key in ("epochs", "steps_per_epoch", "image_size") else value
    return TrainerConfig(**values)
