/**
 * ViewState: the single client-side store.
 *
 * Geometry is server-authoritative: every committed gesture becomes exactly
 * one edit call, the response's layout id and report replace the editor
 * state, and the metrics panel shows a stale indicator while a recompute is
 * in flight. Undo navigates to the parent layout (layouts are immutable).
 */

import type { ApiClient } from './api.js';
import { ApiError } from './api.js';
import type { Selection } from './gallery.js';
import type { EditEvent, LayoutGraph, MetricReport } from './types.js';

export interface ViewState {
  project: string | null;
  gallerySelection: Selection | null;
  editorLayoutId: string | null;
  layout: LayoutGraph | null;
  selectedLimb: number;
  metrics: MetricReport | null;
  metricsStale: boolean;
  lastRejection: string | null;
  scoreStatus: string | null;
}

type Listener = (state: ViewState) => void;

export class Store {
  private state: ViewState = {
    project: null,
    gallerySelection: null,
    editorLayoutId: null,
    layout: null,
    selectedLimb: -1,
    metrics: null,
    metricsStale: false,
    lastRejection: null,
    scoreStatus: null,
  };

  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  get(): ViewState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  async openProject(project: string): Promise<void> {
    this.update({ project, editorLayoutId: null, layout: null, metrics: null });
  }

  async openLayout(layoutId: string): Promise<void> {
    const project = this.requireProject();
    const layout = await this.api.getLayout(project, layoutId);
    this.update({ editorLayoutId: layoutId, layout, selectedLimb: -1,
                  metricsStale: true });
    const metrics = await this.api.getMetrics(project, layoutId);
    this.update({ metrics, metricsStale: false });
  }

  async selectCandidate(selection: Selection): Promise<void> {
    const project = this.requireProject();
    await this.api.markPreferred(project, selection.set, selection.candidate);
    this.update({ gallerySelection: selection });
  }

  /**
   * Commit one edit event. The previous metrics stay visible but flagged
   * stale until the service answers with the child layout's fresh report.
   */
  async commitEdit(edit: EditEvent): Promise<void> {
    const project = this.requireProject();
    const layoutId = this.state.editorLayoutId;
    if (layoutId === null) throw new Error('no layout open');
    this.update({ metricsStale: true, lastRejection: null });
    try {
      const result = await this.api.applyEdit(project, layoutId, edit);
      const layout = await this.api.getLayout(project, result.layout_id);
      this.update({
        editorLayoutId: result.layout_id,
        layout,
        selectedLimb: -1,
        metrics: result.report,
        metricsStale: false,
      });
    } catch (err) {
      if (err instanceof ApiError) {
        // rejected gesture: layout unchanged, report the reason
        this.update({ metricsStale: false, lastRejection: err.message });
        return;
      }
      this.update({ metricsStale: false });
      throw err;
    }
  }

  /** Undo = show the parent layout; its stored report is refetched. */
  async undo(): Promise<void> {
    const parent = this.state.layout?.parent;
    if (!parent) {
      this.update({ lastRejection: 'already at the root layout' });
      return;
    }
    await this.openLayout(parent);
  }

  async submitScore(critic: string, score: number): Promise<void> {
    const project = this.requireProject();
    const layoutId = this.state.editorLayoutId;
    if (layoutId === null) throw new Error('no layout open');
    const result = await this.api.recordScore(project, layoutId, critic, score);
    const metrics = await this.api.getMetrics(project, layoutId);
    this.update({ metrics, scoreStatus: `recorded (mean ${result.mean.toFixed(2)})` });
  }

  selectLimb(index: number): void {
    this.update({ selectedLimb: index });
  }

  private requireProject(): string {
    if (this.state.project === null) throw new Error('no project open');
    return this.state.project;
  }
}
