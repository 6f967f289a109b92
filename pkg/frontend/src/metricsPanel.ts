/**
 * Metric report -> display rows, mirroring the report table's indicator
 * order (1 drift, 2 torsion, 3 period, 4 columns, 5 short limbs, 6 wall
 * length). Values and flags are taken verbatim from the service response;
 * the panel never recomputes a number or a limit.
 */

import type { MetricReport } from './types.js';

export interface MetricRow {
  key: string;
  label: string;
  /** raw service value, untouched */
  value: number | null;
  display: string;
  limit: string;
  exceed: boolean;
}

const INDICATORS: { key: keyof MetricReport & string; label: string;
                    limit: string; flag?: 'drift' | 'torsion' | 'period';
                    decimals: number }[] = [
  { key: 'drift_reciprocal', label: '1 drift reciprocal', limit: '>= 1000',
    flag: 'drift', decimals: 0 },
  { key: 'r_torsion', label: '2 torsional ratio', limit: '<= 1.4',
    flag: 'torsion', decimals: 2 },
  { key: 'r_period', label: '3 period ratio', limit: '<= 0.9',
    flag: 'period', decimals: 2 },
  { key: 'n_column', label: '4 columns', limit: '-', decimals: 0 },
  { key: 'n_short', label: '5 short limbs', limit: '-', decimals: 0 },
  { key: 'l_wall', label: '6 wall length (m)', limit: '-', decimals: 1 },
];

export function metricRows(report: MetricReport): MetricRow[] {
  return INDICATORS.map(({ key, label, limit, flag, decimals }) => {
    const value = report[key] as number | null;
    return {
      key,
      label,
      value,
      display: value === null ? 'n/a' : value.toFixed(decimals),
      limit,
      exceed: flag !== undefined && report.flags[flag] === 'Exceed',
    };
  });
}

export interface AssumptionRow {
  parameter: string;
  value: number;
  provenance: string;
}

export function assumptionRows(report: MetricReport): AssumptionRow[] {
  return report.assumptions.map(([parameter, value, provenance]) => ({
    parameter, value, provenance,
  }));
}

/** Static HTML rendering (row per indicator, .exceed class on violations). */
export function renderPanelHtml(report: MetricReport, stale: boolean): string {
  if (report.error) {
    return `<div class="metrics-error">structural analysis failed: `
      + `${escapeHtml(report.error)} — geometric metrics only `
      + `(columns ${report.n_column}, short ${report.n_short}, `
      + `wall ${report.l_wall.toFixed(1)} m)</div>`;
  }
  const rows = metricRows(report)
    .map((r) => `<tr class="${r.exceed ? 'exceed' : 'pass'}" data-key="${r.key}">`
      + `<td>${escapeHtml(r.label)}</td><td>${r.display}</td>`
      + `<td>${escapeHtml(r.limit)}</td>`
      + `<td>${r.exceed ? 'Exceed' : (r.limit === '-' ? 'info' : 'Pass')}</td></tr>`)
    .join('');
  const score = report.s_layout === null
    ? ''
    : `<tr data-key="s_layout"><td>7 layout score</td>`
      + `<td>${report.s_layout.toFixed(1)}</td><td>0..10</td><td>info</td></tr>`;
  const staleClass = stale ? ' stale' : '';
  return `<table class="metrics${staleClass}"><thead>`
    + `<tr><th>indicator</th><th>value</th><th>limit</th><th>status</th></tr>`
    + `</thead><tbody>${rows}${score}</tbody></table>`;
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (c) => ({
    '&': '&amp;', '<': '&lt;', '>': '&gt;', '"': '&quot;', "'": '&#39;',
  }[c]!));
}
