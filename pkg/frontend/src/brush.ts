import { MaskLayer } from "./maskLayer.js";

export interface StrokePoint {
  x: number;
  y: number;
}

export interface Stroke {
  points: StrokePoint[];
  radius: number;
  label: number;
}

/** Spacing of disk stamps along a stroke segment, in pixels. */
export const STAMP_SPACING = 0.5;

/**
 * Paint one hard-edged disk: a pixel is covered when its integer center
 * lies within `radius` of the stamp center. No anti-aliasing — labels are
 * categorical.
 */
export function stampDisk(
  mask: MaskLayer,
  cx: number,
  cy: number,
  radius: number,
  label: number,
): void {
  const r2 = radius * radius;
  const x0 = Math.max(0, Math.floor(cx - radius));
  const x1 = Math.min(mask.width - 1, Math.ceil(cx + radius));
  const y0 = Math.max(0, Math.floor(cy - radius));
  const y1 = Math.min(mask.height - 1, Math.ceil(cy + radius));
  for (let y = y0; y <= y1; y++) {
    for (let x = x0; x <= x1; x++) {
      const dx = x - cx;
      const dy = y - cy;
      if (dx * dx + dy * dy <= r2) {
        mask.set(x, y, label);
      }
    }
  }
}

/**
 * Positions where a stroke stamps its disk: every vertex, plus interpolated
 * points every STAMP_SPACING pixels along each segment (endpoints included).
 */
export function strokeStampCenters(points: StrokePoint[]): StrokePoint[] {
  if (points.length === 0) return [];
  const centers: StrokePoint[] = [points[0]];
  for (let i = 1; i < points.length; i++) {
    const a = points[i - 1];
    const b = points[i];
    const dist = Math.hypot(b.x - a.x, b.y - a.y);
    const steps = Math.max(1, Math.ceil(dist / STAMP_SPACING));
    for (let s = 1; s <= steps; s++) {
      const t = s / steps;
      centers.push({ x: a.x + (b.x - a.x) * t, y: a.y + (b.y - a.y) * t });
    }
  }
  return centers;
}

/** Rasterize a polyline stroke as a union of disk stamps. */
export function rasterizeStroke(mask: MaskLayer, stroke: Stroke): void {
  if (stroke.radius < 0) throw new Error(`negative brush radius ${stroke.radius}`);
  for (const c of strokeStampCenters(stroke.points)) {
    stampDisk(mask, c.x, c.y, stroke.radius, stroke.label);
  }
}
