/**
 * Session view state and its pure event reducers.
 *
 * The stream may replay events after a reconnect, so every indexed event
 * (discovery, metrics) is deduplicated by sample index here, in one place;
 * the grid and chart can then consume the arrays as-is.  Inlier badges are
 * recomputed locally from each discovery's constraint features whenever
 * the ROI changes, keeping badges consistent with the latest census
 * without a history re-fetch.
 */

import type { RoiIntervals, SessionState } from "./api.js";
import { classify } from "./roi.js";

export interface Discovery {
  index: number;
  classification: 1 | -1;
  behavior: number[];
  constraint_features: Record<string, number>;
  thumbnail_url: string;
}

export interface MetricsPoint {
  index: number;
  global_div: number;
  constrained_div: number;
  acceptance: number;
}

export interface FeatureRange {
  min: number;
  max: number;
}

export interface SessionView {
  sessionState: SessionState;
  /** Dense, index-ordered; discoveries[i].index === i. */
  discoveries: Discovery[];
  /** Dense, index-ordered diversity/acceptance series. */
  metrics: MetricsPoint[];
  census: { inlier_count: number; total: number } | null;
  roi: RoiIntervals;
  /** Observed value ranges per constraint feature, for slider scaling. */
  featureRanges: Record<string, FeatureRange>;
  /** Set when a roi_applied event arrives from elsewhere (another client);
   * the owner of this flag should re-fetch the session snapshot. */
  roiStale: boolean;
}

export function initialView(roi: RoiIntervals = {}): SessionView {
  return {
    sessionState: "idle",
    discoveries: [],
    metrics: [],
    census: null,
    roi,
    featureRanges: {},
    roiStale: false,
  };
}

function widenRanges(
  ranges: Record<string, FeatureRange>,
  features: Record<string, number>,
): Record<string, FeatureRange> {
  const next = { ...ranges };
  for (const [name, value] of Object.entries(features)) {
    const r = next[name];
    next[name] = r
      ? { min: Math.min(r.min, value), max: Math.max(r.max, value) }
      : { min: value, max: value };
  }
  return next;
}

/** Folds one stream event into the view; unknown event names are ignored
 * so the client tolerates service additions. */
export function applyEvent(
  view: SessionView,
  name: string,
  data: unknown,
): SessionView {
  switch (name) {
    case "discovery": {
      const d = data as Discovery;
      // Streams resume at discoveries.length, so the only index we can
      // extend with is exactly length; anything lower is a replay.
      if (d.index !== view.discoveries.length) return view;
      return {
        ...view,
        discoveries: [...view.discoveries, d],
        featureRanges: widenRanges(view.featureRanges, d.constraint_features),
      };
    }
    case "metrics": {
      const m = data as MetricsPoint;
      if (m.index !== view.metrics.length) return view;
      return { ...view, metrics: [...view.metrics, m] };
    }
    case "state": {
      const s = (data as { state: SessionState }).state;
      return { ...view, sessionState: s };
    }
    case "roi_applied": {
      const census = data as { inlier_count: number; total: number };
      return { ...view, census, roiStale: true };
    }
    default:
      return view;
  }
}

/** Applies an ROI this client set itself (census from the PUT response):
 * badges are recomputed locally and the stale flag cleared. */
export function applyOwnRoi(
  view: SessionView,
  roi: RoiIntervals,
  census: { inlier_count: number; total: number },
): SessionView {
  const discoveries = view.discoveries.map((d) => ({
    ...d,
    classification: classify(d.constraint_features, roi),
  }));
  return { ...view, roi, census, discoveries, roiStale: false };
}

/** Local census over the discoveries currently held by the view. */
export function inlierCount(view: SessionView): number {
  return view.discoveries.reduce(
    (n, d) => n + (d.classification === 1 ? 1 : 0),
    0,
  );
}

/** Index to resume the event stream from after a disconnect.  A drop can
 * land between a discovery and its paired metrics event, so resume from
 * the shorter series; the replayed overlap is deduplicated by index. */
export function resumeIndex(view: SessionView): number {
  return Math.min(view.discoveries.length, view.metrics.length);
}
