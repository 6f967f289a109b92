/**
 * Grid snapping and canvas/plan coordinate mapping for the editor.
 *
 * Drawing snaps to the service's 50 mm grid and standard wall thicknesses;
 * the geometry itself is always validated server-side, snapping only keeps
 * gestures on the same lattice the service uses.
 */

export const GRID_MM = 50;
export const STANDARD_THICKNESS_MM = [200, 250, 300] as const;
export const DEFAULT_THICKNESS_MM = 200;
/** Gestures shorter than this are rejected as slivers before hitting the API. */
export const MIN_LIMB_LENGTH_MM = 200;

/** Nearest multiple of the grid; ties round toward +infinity (service rule). */
export function snapMm(value: number, grid: number = GRID_MM): number {
  return Math.floor(value / grid + 0.5) * grid;
}

export function snapThickness(value: number): number {
  let best: number = STANDARD_THICKNESS_MM[0];
  for (const t of STANDARD_THICKNESS_MM) {
    if (Math.abs(t - value) < Math.abs(best - value)) best = t;
  }
  return best;
}

export interface CanvasTransform {
  /** raster canvas size in px (square) */
  canvasPx: number;
  /** mm per raster pixel */
  scaleMmPerPx: number;
  /** CSS pixels per raster pixel */
  zoom: number;
}

/**
 * Plan-mm -> screen-px. Layout graphs from candidates live in the raster's
 * canvas-mm frame already, so the identity offset applies to them; the plan
 * underlay needs the same centering shift the rasterizer used.
 */
export function mmToScreen(xMm: number, yMm: number, t: CanvasTransform):
    { x: number; y: number } {
  return {
    x: (xMm / t.scaleMmPerPx) * t.zoom,
    y: (t.canvasPx - yMm / t.scaleMmPerPx) * t.zoom,
  };
}

export function screenToMm(xPx: number, yPx: number, t: CanvasTransform):
    { x: number; y: number } {
  return {
    x: (xPx / t.zoom) * t.scaleMmPerPx,
    y: (t.canvasPx - yPx / t.zoom) * t.scaleMmPerPx,
  };
}

/**
 * The rasterizer's centering translation (mm), quantized to the pixel grid.
 * Used only to draw the architectural underlay in the layout's frame.
 */
export function centeringOffsetMm(
    extent: { minX: number; minY: number; maxX: number; maxY: number },
    canvasPx: number, scaleMmPerPx: number): { ox: number; oy: number } {
  const width = extent.maxX - extent.minX;
  const height = extent.maxY - extent.minY;
  let ox = Math.floor((canvasPx * scaleMmPerPx - width) / 2) - extent.minX;
  let oy = Math.floor((canvasPx * scaleMmPerPx - height) / 2) - extent.minY;
  ox -= ((ox % scaleMmPerPx) + scaleMmPerPx) % scaleMmPerPx;
  oy -= ((oy % scaleMmPerPx) + scaleMmPerPx) % scaleMmPerPx;
  return { ox, oy };
}
