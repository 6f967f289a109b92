import { describe, expect, it } from 'vitest';

import {
  centeringOffsetMm, mmToScreen, screenToMm, snapMm, snapThickness,
} from '../src/snapping.js';

describe('snapMm', () => {
  it('snaps to the nearest 50 mm multiple', () => {
    expect(snapMm(149)).toBe(150);
    expect(snapMm(124)).toBe(100);
    expect(snapMm(0)).toBe(0);
  });

  it('ties round toward +infinity (service rule)', () => {
    expect(snapMm(125)).toBe(150);
    expect(snapMm(-125)).toBe(-100);
  });
});

describe('snapThickness', () => {
  it('picks the nearest standard thickness', () => {
    expect(snapThickness(190)).toBe(200);
    expect(snapThickness(240)).toBe(250);
    expect(snapThickness(1000)).toBe(300);
  });
});

describe('coordinate transforms', () => {
  const t = { canvasPx: 128, scaleMmPerPx: 100, zoom: 4 };

  it('round-trips screen <-> mm', () => {
    const mm = screenToMm(200, 80, t);
    const back = mmToScreen(mm.x, mm.y, t);
    expect(back.x).toBeCloseTo(200, 9);
    expect(back.y).toBeCloseTo(80, 9);
  });

  it('flips the y axis (row 0 is max plan y)', () => {
    const top = screenToMm(0, 0, t);
    const bottom = screenToMm(0, 128 * 4, t);
    expect(top.y).toBe(12800);
    expect(bottom.y).toBe(0);
  });
});

describe('centeringOffsetMm', () => {
  it('matches the rasterizer: quantized to the pixel grid', () => {
    // 12 m plan on a 128 px / 100 mm canvas: (12800 - 12000) / 2 = 400
    const offset = centeringOffsetMm(
      { minX: 0, minY: 0, maxX: 12000, maxY: 12000 }, 128, 100);
    expect(offset).toEqual({ ox: 400, oy: 400 });
  });

  it('drops sub-pixel remainders toward -infinity', () => {
    // width 25500 on 512 px / 100 mm: (51200 - 25500) / 2 = 12850 -> 12800
    const offset = centeringOffsetMm(
      { minX: 0, minY: 0, maxX: 25500, maxY: 25500 }, 512, 100);
    expect(offset.ox).toBe(12800);
    expect(offset.ox % 100).toBe(0);
  });
});
