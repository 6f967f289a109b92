/**
 * Browser entry point: wires the store to the DOM.
 *
 * Layout canvas: architectural underlay in gray (plan frame shifted by the
 * rasterizer's centering offset), limbs in red, selection outline in blue.
 * Drag on empty space draws a limb, drag on a limb moves it, Delete removes
 * the selection, the score form posts clamped critic scores.
 */

import { ApiClient } from './api.js';
import { deleteSelection, drawGesture, hitTestLimb, moveGesture } from './editor.js';
import { galleryTiles, renderGalleryHtml } from './gallery.js';
import { renderPanelHtml } from './metricsPanel.js';
import { validateScore } from './score.js';
import { centeringOffsetMm, screenToMm, type CanvasTransform } from './snapping.js';
import { Store } from './state.js';
import type { PlanDoc, RectMm } from './types.js';

const api = new ApiClient('');
const store = new Store(api);

const els = {
  projects: document.querySelector<HTMLSelectElement>('#projects')!,
  gallery: document.querySelector<HTMLElement>('#gallery')!,
  canvas: document.querySelector<HTMLCanvasElement>('#editor')!,
  metrics: document.querySelector<HTMLElement>('#metrics')!,
  rejection: document.querySelector<HTMLElement>('#rejection')!,
  layoutLabel: document.querySelector<HTMLElement>('#layout-label')!,
  undo: document.querySelector<HTMLButtonElement>('#undo')!,
  critic: document.querySelector<HTMLInputElement>('#critic')!,
  score: document.querySelector<HTMLInputElement>('#score')!,
  scoreSubmit: document.querySelector<HTMLButtonElement>('#score-submit')!,
  scoreStatus: document.querySelector<HTMLElement>('#score-status')!,
};

const transform: CanvasTransform = { canvasPx: 128, scaleMmPerPx: 100, zoom: 4 };
let plan: PlanDoc | null = null;
let planOffset = { ox: 0, oy: 0 };
let drag: { startX: number; startY: number; onLimb: number } | null = null;

function rectPath(ctx: CanvasRenderingContext2D, rect: RectMm,
                  shift: { ox: number; oy: number }): void {
  const [x0, y0, x1, y1] = rect;
  const px = (x0 + shift.ox) / transform.scaleMmPerPx * transform.zoom;
  const py = (transform.canvasPx - (y1 + shift.oy) / transform.scaleMmPerPx) * transform.zoom;
  const w = (x1 - x0) / transform.scaleMmPerPx * transform.zoom;
  const h = (y1 - y0) / transform.scaleMmPerPx * transform.zoom;
  ctx.rect(px, py, w, h);
}

function redraw(): void {
  const state = store.get();
  const ctx = els.canvas.getContext('2d')!;
  const side = transform.canvasPx * transform.zoom;
  els.canvas.width = side;
  els.canvas.height = side;
  ctx.fillStyle = '#ffffff';
  ctx.fillRect(0, 0, side, side);

  if (plan) {
    ctx.fillStyle = '#7f7f7f';
    for (const wall of plan.arch_walls) {
      ctx.beginPath();
      rectPath(ctx, wall, planOffset);
      ctx.fill();
    }
    ctx.fillStyle = '#ffffff';
    for (const opening of plan.openings) {
      ctx.beginPath();
      rectPath(ctx, opening, planOffset);
      ctx.fill();
    }
  }
  const layout = state.layout;
  if (layout) {
    layout.limbs.forEach((limb, i) => {
      const [[ax, ay], [bx, by]] = limb.centerline;
      const half = limb.thickness / 2;
      const rect: RectMm = ay === by
        ? [Math.min(ax, bx), ay - half, Math.max(ax, bx), ay + half]
        : [ax - half, Math.min(ay, by), ax + half, Math.max(ay, by)];
      ctx.beginPath();
      rectPath(ctx, rect, { ox: 0, oy: 0 });
      ctx.fillStyle = '#ff0000';
      ctx.fill();
      if (i === state.selectedLimb) {
        ctx.strokeStyle = '#1565c0';
        ctx.lineWidth = 2;
        ctx.stroke();
      }
    });
    for (const column of layout.columns) {
      ctx.beginPath();
      rectPath(ctx, column.bounds, { ox: 0, oy: 0 });
      ctx.fillStyle = '#ff0000';
      ctx.fill();
    }
  }
}

function render(): void {
  const state = store.get();
  els.layoutLabel.textContent = state.editorLayoutId ?? 'no layout open';
  els.rejection.textContent = state.lastRejection ?? '';
  els.scoreStatus.textContent = state.scoreStatus ?? '';
  els.metrics.innerHTML = state.metrics
    ? renderPanelHtml(state.metrics, state.metricsStale)
    : '<div class="metrics-empty">open a layout to see its indicators</div>';
  redraw();
}

async function refreshGallery(): Promise<void> {
  const state = store.get();
  if (!state.project) return;
  const sets = await api.listCandidates(state.project, true);
  const tiles = galleryTiles(
    sets, (s, c) => api.candidatePngUrl(state.project!, s, c),
    state.gallerySelection);
  els.gallery.innerHTML = renderGalleryHtml(tiles);
  els.gallery.querySelectorAll<HTMLElement>('.tile').forEach((tile) => {
    tile.addEventListener('click', async () => {
      const set = Number(tile.dataset.set);
      const candidate = Number(tile.dataset.candidate);
      await store.selectCandidate({ set, candidate });
      await refreshGallery();
    });
  });
}

async function openProject(name: string): Promise<void> {
  await store.openProject(name);
  plan = await api.getPlan(name);
  const manifest = await api.getManifest(name) as {
    rasters?: { canvas?: number; scale?: number } | null };
  transform.canvasPx = manifest.rasters?.canvas ?? 128;
  transform.scaleMmPerPx = manifest.rasters?.scale ?? 100;
  const xs = plan.outline.vertices.map((v) => v[0]);
  const ys = plan.outline.vertices.map((v) => v[1]);
  planOffset = centeringOffsetMm(
    { minX: Math.min(...xs), minY: Math.min(...ys),
      maxX: Math.max(...xs), maxY: Math.max(...ys) },
    transform.canvasPx, transform.scaleMmPerPx);
  await refreshGallery();
  const layouts = await api.listLayouts(name);
  if (layouts.length > 0) await store.openLayout(layouts[layouts.length - 1]!.id);
  render();
}

els.canvas.addEventListener('mousedown', (ev) => {
  const rect = els.canvas.getBoundingClientRect();
  const { x, y } = screenToMm(ev.clientX - rect.left, ev.clientY - rect.top, transform);
  const layout = store.get().layout;
  drag = { startX: x, startY: y, onLimb: layout ? hitTestLimb(layout, x, y) : -1 };
});

els.canvas.addEventListener('mouseup', async (ev) => {
  if (!drag) return;
  const rect = els.canvas.getBoundingClientRect();
  const { x, y } = screenToMm(ev.clientX - rect.left, ev.clientY - rect.top, transform);
  const gesture = { startX: drag.startX, startY: drag.startY, endX: x, endY: y };
  const moved = Math.abs(x - drag.startX) + Math.abs(y - drag.startY) > 100;
  if (!moved) {
    store.selectLimb(drag.onLimb);
  } else {
    const result = drag.onLimb >= 0
      ? moveGesture(drag.onLimb, gesture)
      : drawGesture(gesture);
    if (result.ok) await store.commitEdit(result.edit);
    else store.get().lastRejection = result.reason;
  }
  drag = null;
  render();
});

document.addEventListener('keydown', async (ev) => {
  if (ev.key === 'Delete' || ev.key === 'Backspace') {
    const result = deleteSelection(store.get().selectedLimb);
    if (result.ok) {
      await store.commitEdit(result.edit);
      render();
    }
  }
});

els.undo.addEventListener('click', async () => {
  await store.undo();
  render();
});

els.scoreSubmit.addEventListener('click', async () => {
  const validation = validateScore(els.score.value);
  if (!validation.ok) {
    els.scoreStatus.textContent = validation.message;
    return;
  }
  if (validation.clamped) els.score.value = String(validation.score);
  await store.submitScore(els.critic.value || 'critic-1', validation.score);
  render();
});

store.subscribe(() => render());

(async () => {
  const projects = await api.listProjects();
  els.projects.innerHTML = projects
    .map((p) => `<option value="${p}">${p}</option>`).join('');
  els.projects.addEventListener('change', () => openProject(els.projects.value));
  if (projects.length > 0) await openProject(projects[0]!);
})();
