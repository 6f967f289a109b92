/**
 * Wire types mirroring the service's documented JSON schemas.
 * The UI never derives these values itself; they always come from the API.
 */

export interface PointMm {
  x: number;
  y: number;
}

/** [minX, minY, maxX, maxY] in integer millimeters. */
export type RectMm = [number, number, number, number];

export interface Limb {
  centerline: [[number, number], [number, number]];
  thickness: number;
  component_id: number;
}

export interface ColumnBlob {
  shape: 'Rectangular' | 'Irregular';
  bounds: RectMm;
  limb_ratios: number[];
}

export interface LayoutGraph {
  schema: string;
  scale: number;
  source: string;
  limbs: Limb[];
  junctions: { limbs: [number, number]; region: RectMm }[];
  columns: ColumnBlob[];
  id?: string;
  parent?: string | null;
}

export interface PlanDoc {
  schema: string;
  outline: { closed: boolean; vertices: [number, number][] };
  arch_walls: RectMm[];
  openings: RectMm[];
  shear_walls: RectMm[];
  story_meta: { story_height: number; num_stories: number; seismic_label: string };
}

export type LimitFlag = 'Pass' | 'Exceed';

export interface MetricReport {
  schema: string;
  drift_reciprocal: number | null;
  r_torsion: number | null;
  r_period: number | null;
  n_column: number;
  n_short: number;
  l_wall: number;
  s_layout: number | null;
  flags: { drift?: LimitFlag; torsion?: LimitFlag; period?: LimitFlag };
  assumptions: [string, number, string][];
  error?: string;
  detail?: string;
}

export interface QuickMetrics {
  n_column: number;
  n_short: number;
  l_wall: number;
}

export interface CandidateEntry {
  id: number;
  seed: number;
  file: string;
  quick_metrics?: QuickMetrics;
}

export interface CandidateSet {
  set: number;
  params: Record<string, unknown>;
  candidates: CandidateEntry[];
}

export interface LayoutListEntry {
  id: string;
  file: string;
  parent: string | null;
  source: string;
  has_report: boolean;
}

export type EditKind = 'AddLimb' | 'RemoveLimb' | 'MoveLimb' | 'ResizeLimb';

export interface EditEvent {
  kind: EditKind;
  index?: number;
  centerline?: [[number, number], [number, number]];
  thickness?: number;
  dx?: number;
  dy?: number;
}

export interface EditResponse {
  layout_id: string;
  parent: string;
  report: MetricReport;
}

export interface ScoreResponse {
  scores: Record<string, number>;
  mean: number;
}
