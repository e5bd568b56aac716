/**
 * Thumbnail grid windowing.  Beyond a threshold the grid renders only a
 * window of thumbnails around the scroll position (plus a spacer for the
 * rest) so sessions with thousands of discoveries stay responsive.
 */

export const VIRTUAL_THRESHOLD = 500;

export interface GridWindow {
  /** First discovery index rendered as a real thumbnail. */
  start: number;
  /** One past the last rendered index. */
  end: number;
  total: number;
}

/**
 * Window of at most `windowSize` items centered on the scroll position.
 * scrollRatio is 0 at the top of the grid and 1 at the bottom; values
 * outside [0, 1] clamp.
 */
export function visibleWindow(
  total: number,
  scrollRatio: number,
  windowSize = VIRTUAL_THRESHOLD,
): GridWindow {
  if (total <= windowSize) {
    return { start: 0, end: total, total };
  }
  const ratio = Math.min(1, Math.max(0, scrollRatio));
  const center = Math.round(ratio * total);
  let start = center - Math.floor(windowSize / 2);
  start = Math.min(Math.max(start, 0), total - windowSize);
  return { start, end: start + windowSize, total };
}
