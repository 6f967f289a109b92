/**
 * Canvas gestures -> edit events.
 *
 * Every committed gesture maps to exactly one edit event; rejected gestures
 * (slivers, empty moves) produce a rejection with a reason and no API call.
 * Undo is navigation to the parent layout, never a local mutation.
 */

import {
  DEFAULT_THICKNESS_MM, GRID_MM, MIN_LIMB_LENGTH_MM, snapMm,
} from './snapping.js';
import type { EditEvent, LayoutGraph, Limb } from './types.js';

export interface DragGesture {
  /** plan/layout frame, millimeters (already unprojected from the screen) */
  startX: number;
  startY: number;
  endX: number;
  endY: number;
}

export type GestureResult =
  | { ok: true; edit: EditEvent }
  | { ok: false; reason: string };

/** Drag on empty canvas: draw one axis-aligned limb of default thickness. */
export function drawGesture(g: DragGesture,
                            thickness: number = DEFAULT_THICKNESS_MM): GestureResult {
  const dx = g.endX - g.startX;
  const dy = g.endY - g.startY;
  const horizontal = Math.abs(dx) >= Math.abs(dy);
  let centerline: [[number, number], [number, number]];
  if (horizontal) {
    const y = snapMm((g.startY + g.endY) / 2);
    const x0 = snapMm(Math.min(g.startX, g.endX));
    const x1 = snapMm(Math.max(g.startX, g.endX));
    if (x1 - x0 < MIN_LIMB_LENGTH_MM) {
      return { ok: false, reason: `limb shorter than ${MIN_LIMB_LENGTH_MM} mm` };
    }
    centerline = [[x0, y], [x1, y]];
  } else {
    const x = snapMm((g.startX + g.endX) / 2);
    const y0 = snapMm(Math.min(g.startY, g.endY));
    const y1 = snapMm(Math.max(g.startY, g.endY));
    if (y1 - y0 < MIN_LIMB_LENGTH_MM) {
      return { ok: false, reason: `limb shorter than ${MIN_LIMB_LENGTH_MM} mm` };
    }
    centerline = [[x, y0], [x, y1]];
  }
  return { ok: true, edit: { kind: 'AddLimb', centerline, thickness } };
}

/** Drag starting on a limb body: move it by a grid-snapped delta. */
export function moveGesture(index: number, g: DragGesture): GestureResult {
  const dx = snapMm(g.endX - g.startX);
  const dy = snapMm(g.endY - g.startY);
  if (dx === 0 && dy === 0) {
    return { ok: false, reason: 'move smaller than one grid step' };
  }
  return { ok: true, edit: { kind: 'MoveLimb', index, dx, dy } };
}

/** Drag on a limb end: stretch or shrink along its axis. */
export function resizeGesture(limb: Limb, index: number, whichEnd: 0 | 1,
                              g: DragGesture): GestureResult {
  const [[ax, ay], [bx, by]] = limb.centerline;
  const horizontal = ay === by;
  const fixed: [number, number] = whichEnd === 0 ? [bx, by] : [ax, ay];
  const moved: [number, number] = horizontal
    ? [snapMm(g.endX), ay]
    : [ax, snapMm(g.endY)];
  const length = Math.abs(moved[0] - fixed[0]) + Math.abs(moved[1] - fixed[1]);
  if (length < MIN_LIMB_LENGTH_MM) {
    return { ok: false, reason: `limb shorter than ${MIN_LIMB_LENGTH_MM} mm` };
  }
  const lo: [number, number] = [Math.min(fixed[0], moved[0]), Math.min(fixed[1], moved[1])];
  const hi: [number, number] = [Math.max(fixed[0], moved[0]), Math.max(fixed[1], moved[1])];
  return {
    ok: true,
    edit: { kind: 'ResizeLimb', index, centerline: [lo, hi], thickness: limb.thickness },
  };
}

export function deleteSelection(index: number): GestureResult {
  if (index < 0) return { ok: false, reason: 'nothing selected' };
  return { ok: true, edit: { kind: 'RemoveLimb', index } };
}

/** Hit test: index of the limb whose rectangle contains the point, or -1. */
export function hitTestLimb(graph: LayoutGraph, xMm: number, yMm: number): number {
  for (let i = graph.limbs.length - 1; i >= 0; i--) {
    const limb = graph.limbs[i]!;
    const [[ax, ay], [bx, by]] = limb.centerline;
    const half = limb.thickness / 2;
    const minX = Math.min(ax, bx) - (ay === by ? 0 : half);
    const maxX = Math.max(ax, bx) + (ay === by ? 0 : half);
    const minY = Math.min(ay, by) - (ay === by ? half : 0);
    const maxY = Math.max(ay, by) + (ay === by ? half : 0);
    if (xMm >= minX && xMm <= maxX && yMm >= minY && yMm <= maxY) return i;
  }
  return -1;
}

/** Grid step used by arrow-key nudges; one event per keypress. */
export function nudgeEdit(index: number, direction: 'left' | 'right' | 'up' | 'down',
                          step: number = GRID_MM): EditEvent {
  const dx = direction === 'left' ? -step : direction === 'right' ? step : 0;
  const dy = direction === 'down' ? -step : direction === 'up' ? step : 0;
  return { kind: 'MoveLimb', index, dx, dy };
}
