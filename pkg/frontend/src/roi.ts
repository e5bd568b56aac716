/**
 * ROI editor model: per-feature interval drafts, client-side validation,
 * and the same closed-interval classification rule the service applies.
 * Classifying locally lets the grid re-badge thumbnails immediately after
 * an ROI edit instead of re-fetching the whole history.
 */

import type { RoiIntervals } from "./api.js";

export const CONSTRAINT_FEATURES = [
  "volume",
  "mean_pixel",
  "tamura_coarseness",
  "tamura_contrast",
  "tamura_directionality",
] as const;

export type ConstraintFeature = (typeof CONSTRAINT_FEATURES)[number];

export interface IntervalDraft {
  feature: ConstraintFeature;
  enabled: boolean;
  lo: number;
  hi: number;
}

export function defaultDrafts(): IntervalDraft[] {
  return CONSTRAINT_FEATURES.map((feature) => ({
    feature,
    enabled: false,
    lo: 0,
    hi: 1,
  }));
}

/** Drafts seeded from an existing ROI (e.g. a session snapshot). */
export function draftsFromRoi(roi: RoiIntervals): IntervalDraft[] {
  return CONSTRAINT_FEATURES.map((feature) => {
    const interval = roi[feature];
    return interval
      ? { feature, enabled: true, lo: interval[0], hi: interval[1] }
      : { feature, enabled: false, lo: 0, hi: 1 };
  });
}

/** Human-readable validation problems; empty means the draft can be sent. */
export function validateDrafts(drafts: IntervalDraft[]): string[] {
  const problems: string[] = [];
  for (const d of drafts) {
    if (!d.enabled) continue;
    if (!Number.isFinite(d.lo) || !Number.isFinite(d.hi)) {
      problems.push(`${d.feature}: bounds must be numbers`);
    } else if (d.lo > d.hi) {
      problems.push(`${d.feature}: lower bound ${d.lo} exceeds upper ${d.hi}`);
    }
  }
  return problems;
}

/** Enabled drafts as the wire-format ROI; invalid drafts must be rejected
 * by validateDrafts before calling this. */
export function draftsToRoi(drafts: IntervalDraft[]): RoiIntervals {
  const roi: RoiIntervals = {};
  for (const d of drafts) {
    if (d.enabled) roi[d.feature] = [d.lo, d.hi];
  }
  return roi;
}

/** Conjunction of closed intervals; 1 = inlier, -1 = outlier.  An empty
 * ROI accepts everything, mirroring the service. */
export function classify(
  features: Record<string, number>,
  roi: RoiIntervals,
): 1 | -1 {
  for (const [feature, interval] of Object.entries(roi)) {
    const value = features[feature];
    if (value === undefined || value < interval[0] || value > interval[1]) {
      return -1;
    }
  }
  return 1;
}
