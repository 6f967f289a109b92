"""Fixed-palette semantic rasters and plan rasterization.

Palette (8-bit RGB, exact):
    Background (255, 255, 255)
    ArchWall   (127, 127, 127)
    Opening    (0, 170, 255)
    ShearWall  (255,   0,   0)

Coverage rule: a pixel belongs to a rect iff its center lies inside the rect
(half-open, min <= c < max). Class precedence when rects overlap:
ShearWall > Opening > ArchWall > Background.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence, Tuple

import numpy as np
from PIL import Image

from .errors import PlanTooLarge
from .geometry import AxisRect
from .plan import FloorPlan

DEFAULT_CANVAS = 512         # px, square
DEFAULT_SCALE = 100          # mm per px


class PaletteClass(IntEnum):
    Background = 0
    ArchWall = 1
    Opening = 2
    ShearWall = 3


PALETTE_RGB: Tuple[Tuple[int, int, int], ...] = (
    (255, 255, 255),
    (127, 127, 127),
    (0, 170, 255),
    (255, 0, 0),
)

# paint order, lowest precedence first
_PRECEDENCE = (PaletteClass.ArchWall, PaletteClass.Opening, PaletteClass.ShearWall)


@dataclass
class SemanticRaster:
    """Square class-index grid. pixels[row, col]; row 0 is the top (max plan y)."""

    pixels: np.ndarray          # uint8, shape (canvas, canvas)
    scale: int = DEFAULT_SCALE  # mm per px

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise ValueError("raster must be a square 2D grid")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        self.pixels = self.pixels.astype(np.uint8, copy=False)

    @property
    def canvas(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def class_mask(self, cls: PaletteClass) -> np.ndarray:
        return self.pixels == int(cls)

    def to_rgb(self) -> np.ndarray:
        lut = np.array(PALETTE_RGB, dtype=np.uint8)
        return lut[self.pixels]

    def __eq__(self, other) -> bool:
        return (isinstance(other, SemanticRaster)
                and self.scale == other.scale
                and np.array_equal(self.pixels, other.pixels))


def blank_raster(canvas: int = DEFAULT_CANVAS, scale: int = DEFAULT_SCALE) -> SemanticRaster:
    return SemanticRaster(np.zeros((canvas, canvas), dtype=np.uint8), scale)


def _paint_rects(pixels: np.ndarray, rects: Sequence[AxisRect], cls: PaletteClass,
                 ox: int, oy: int, scale: int) -> None:
    """Paint rects (plan mm, translated by (ox, oy)) using pixel-center coverage.

    Pixel (row, col) center sits at canvas-mm ((col + 0.5) * scale,
    (canvas - row - 0.5) * scale); center-in-rect reduces to integer ceil/floor
    bounds below.
    """
    canvas = pixels.shape[0]
    for r in rects:
        # columns whose center x in [min, max):  min <= (c + .5)*s < max
        c0 = _ceil_div(2 * (r.min.x + ox) - scale, 2 * scale)
        c1 = _ceil_div(2 * (r.max.x + ox) - scale, 2 * scale)   # exclusive
        y_lo, y_hi = r.min.y + oy, r.max.y + oy
        # rows: center y = (canvas - row - .5)*s in [y_lo, y_hi)
        r1 = canvas - _ceil_div(2 * y_lo + scale, 2 * scale) + 1      # exclusive
        r0 = canvas - _ceil_div(2 * (y_hi - scale) + scale, 2 * scale)
        c0, c1 = max(c0, 0), min(c1, canvas)
        r0, r1 = max(r0, 0), min(r1, canvas)
        if c0 < c1 and r0 < r1:
            pixels[r0:r1, c0:c1] = int(cls)


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def centering_offset(bbox: AxisRect, canvas: int, scale: int) -> Tuple[int, int]:
    """Translation (mm) that centers the bbox on the canvas, quantized to the
    pixel grid so grid-aligned geometry lands exactly on pixel boundaries."""
    ox = (canvas * scale - bbox.width) // 2 - bbox.min.x
    oy = (canvas * scale - bbox.height) // 2 - bbox.min.y
    return ox - ox % scale, oy - oy % scale


def paint_rects(pixels: np.ndarray, rects: Sequence[AxisRect], cls: PaletteClass,
                ox: int, oy: int, scale: int) -> None:
    """Public painting entry point (see _paint_rects for the coverage rule)."""
    _paint_rects(pixels, rects, cls, ox, oy, scale)


def rasterize_plan(plan: FloorPlan, include_shear: bool,
                   canvas: int = DEFAULT_CANVAS, scale: int = DEFAULT_SCALE) -> SemanticRaster:
    """Render a normalized plan centered on the canvas.

    Raises PlanTooLarge when the plan extent does not fit canvas * scale.
    """
    bbox = plan.extent()
    if bbox.width > canvas * scale or bbox.height > canvas * scale:
        raise PlanTooLarge(
            f"extent {bbox.width}x{bbox.height} mm exceeds canvas {canvas * scale} mm")
    ox, oy = centering_offset(bbox, canvas, scale)

    pixels = np.zeros((canvas, canvas), dtype=np.uint8)
    layers = [(plan.arch_walls, PaletteClass.ArchWall),
              (plan.openings, PaletteClass.Opening)]
    if include_shear:
        layers.append((plan.shear_walls, PaletteClass.ShearWall))
    for rects, cls in layers:
        _paint_rects(pixels, rects, cls, ox, oy, scale)
    return SemanticRaster(pixels, scale)


def rasterize_rects(rects: Sequence[AxisRect], cls: PaletteClass,
                    canvas: int, scale: int,
                    base: SemanticRaster | None = None) -> SemanticRaster:
    """Paint plan-space rects onto a blank (or given) canvas without centering."""
    pixels = base.pixels.copy() if base is not None else np.zeros((canvas, canvas), np.uint8)
    _paint_rects(pixels, rects, cls, 0, 0, scale)
    return SemanticRaster(pixels, scale)


def coverage_oracle(rects: Sequence[AxisRect], canvas: int, scale: int,
                    ox: int = 0, oy: int = 0) -> np.ndarray:
    """Brute-force per-pixel center-in-rect test (slow; for tests only)."""
    mask = np.zeros((canvas, canvas), dtype=bool)
    for row in range(canvas):
        cy = (canvas - row - 0.5) * scale
        for col in range(canvas):
            cx = (col + 0.5) * scale
            for r in rects:
                if (r.min.x + ox <= cx < r.max.x + ox
                        and r.min.y + oy <= cy < r.max.y + oy):
                    mask[row, col] = True
                    break
    return mask


def encode_png(raster: SemanticRaster) -> bytes:
    """Lossless 8-bit RGB PNG with exact palette values."""
    img = Image.fromarray(raster.to_rgb(), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes, scale: int = DEFAULT_SCALE) -> SemanticRaster:
    """Decode a PNG of exact palette colors back to class indices.

    Raises ValueError when any pixel is off-palette; use
    vectorize.classify_pixels for tolerant decoding of generated images.
    """
    rgb = rgb_from_png(data)
    pixels = np.full(rgb.shape[:2], 255, dtype=np.uint8)
    for cls, color in zip(PaletteClass, PALETTE_RGB):
        pixels[np.all(rgb == color, axis=-1)] = int(cls)
    if (pixels == 255).any():
        raise ValueError("image contains off-palette pixels")
    return SemanticRaster(pixels, scale)


def rgb_from_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data)).convert("RGB")
    return np.asarray(img, dtype=np.uint8)
