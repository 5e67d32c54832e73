/**
 * Brush geometry and selection combination, in data space.
 *
 * A brush commit maps screen geometry to item indices and combines them
 * with the current selection (replace / add / remove), producing exactly
 * one `selection.set` call. All functions here are pure.
 */

export type BrushTool = "rectangle" | "lasso" | "brush";
export type CombineMode = "replace" | "add" | "remove";

export interface Point {
  x: number;
  y: number;
}

export interface Rect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function pointsInRect(xs: Float32Array, ys: Float32Array, rect: Rect): number[] {
  const xmin = Math.min(rect.x0, rect.x1);
  const xmax = Math.max(rect.x0, rect.x1);
  const ymin = Math.min(rect.y0, rect.y1);
  const ymax = Math.max(rect.y0, rect.y1);
  const hits: number[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (xs[i] >= xmin && xs[i] <= xmax && ys[i] >= ymin && ys[i] <= ymax) {
      hits.push(i);
    }
  }
  return hits;
}

/** Ray-casting point-in-polygon; the polygon closes itself. */
export function pointInPolygon(x: number, y: number, polygon: Point[]): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i];
    const b = polygon[j];
    if (a.y > y !== b.y > y && x < ((b.x - a.x) * (y - a.y)) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

export function pointsInPolygon(xs: Float32Array, ys: Float32Array, polygon: Point[]): number[] {
  if (polygon.length < 3) return [];
  const hits: number[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (pointInPolygon(xs[i], ys[i], polygon)) hits.push(i);
  }
  return hits;
}

/** Points within `radius` of any sample along a brush stroke. */
export function pointsNearStroke(
  xs: Float32Array,
  ys: Float32Array,
  stroke: Point[],
  radius: number,
): number[] {
  const r2 = radius * radius;
  const hits: number[] = [];
  for (let i = 0; i < xs.length; i++) {
    for (const sample of stroke) {
      const dx = xs[i] - sample.x;
      const dy = ys[i] - sample.y;
      if (dx * dx + dy * dy <= r2) {
        hits.push(i);
        break;
      }
    }
  }
  return hits;
}

export function combineSelection(
  current: ReadonlySet<number>,
  hits: number[],
  mode: CombineMode,
): number[] {
  if (mode === "replace") {
    return [...new Set(hits)].sort((a, b) => a - b);
  }
  const merged = new Set(current);
  if (mode === "add") {
    for (const index of hits) merged.add(index);
  } else {
    for (const index of hits) merged.delete(index);
  }
  return [...merged].sort((a, b) => a - b);
}
