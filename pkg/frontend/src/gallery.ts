/**
 * Candidate gallery: one tile per generated candidate with its seed and
 * quick metrics (short-limb count, wall length); selecting a tile marks it
 * preferred on the service and opens it in the editor.
 */

import type { CandidateSet } from './types.js';

export interface GalleryTile {
  set: number;
  candidate: number;
  seed: number;
  pngUrl: string;
  nShort: number | null;
  lWall: number | null;
  selected: boolean;
}

export interface Selection {
  set: number;
  candidate: number;
}

export function galleryTiles(sets: CandidateSet[],
                             pngUrl: (set: number, candidate: number) => string,
                             selection: Selection | null): GalleryTile[] {
  const tiles: GalleryTile[] = [];
  for (const cs of sets) {
    for (const cand of cs.candidates) {
      tiles.push({
        set: cs.set,
        candidate: cand.id,
        seed: cand.seed,
        pngUrl: pngUrl(cs.set, cand.id),
        nShort: cand.quick_metrics?.n_short ?? null,
        lWall: cand.quick_metrics?.l_wall ?? null,
        selected: selection !== null
          && selection.set === cs.set && selection.candidate === cand.id,
      });
    }
  }
  return tiles;
}

export function renderGalleryHtml(tiles: GalleryTile[]): string {
  if (tiles.length === 0) {
    return '<div class="gallery-empty">No candidates yet — run Generate to '
      + 'request layouts from the diffusion endpoint.</div>';
  }
  return tiles
    .map((t) => {
      const metrics = t.nShort === null
        ? ''
        : `<span class="tile-metrics">short ${t.nShort} · `
          + `wall ${t.lWall?.toFixed(1)} m</span>`;
      return `<figure class="tile${t.selected ? ' selected' : ''}" `
        + `data-set="${t.set}" data-candidate="${t.candidate}">`
        + `<img src="${t.pngUrl}" alt="candidate ${t.set}/${t.candidate}">`
        + `<figcaption>seed ${t.seed} ${metrics}</figcaption></figure>`;
    })
    .join('');
}
