/**
 * Critic score entry: values clamp to the service's [0, 10] range before
 * submission; non-numeric input is blocked with a message.
 */

export const SCORE_MIN = 0;
export const SCORE_MAX = 10;

export type ScoreValidation =
  | { ok: true; score: number; clamped: boolean }
  | { ok: false; message: string };

export function validateScore(raw: string | number): ScoreValidation {
  const value = typeof raw === 'number' ? raw : Number(raw.trim());
  if (raw === '' || Number.isNaN(value)) {
    return { ok: false, message: 'enter a number between 0 and 10' };
  }
  const clamped = Math.min(SCORE_MAX, Math.max(SCORE_MIN, value));
  return { ok: true, score: clamped, clamped: clamped !== value };
}
