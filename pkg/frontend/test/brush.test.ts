import { describe, expect, it } from "vitest";

import { MaskLayer } from "../src/maskLayer.js";
import { rasterizeStroke, stampDisk, strokeStampCenters, Stroke } from "../src/brush.js";

/** Independent pixel oracle: brute-force disk union over the stamp centers. */
function oracleRaster(
  width: number,
  height: number,
  centers: Array<{ x: number; y: number }>,
  radius: number,
  label: number,
  background = 0,
): Uint8Array {
  const out = new Uint8Array(width * height).fill(background);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (const c of centers) {
        const dx = x - c.x;
        const dy = y - c.y;
        if (dx * dx + dy * dy <= radius * radius) {
          out[y * width + x] = label;
          break;
        }
      }
    }
  }
  return out;
}

describe("stampDisk", () => {
  it("paints exactly the pixels within radius", () => {
    const mask = new MaskLayer(16, 16);
    stampDisk(mask, 8, 8, 3, 5);
    const expected = oracleRaster(16, 16, [{ x: 8, y: 8 }], 3, 5);
    expect([...mask.data]).toEqual([...expected]);
  });

  it("radius zero paints the single center pixel", () => {
    const mask = new MaskLayer(8, 8);
    stampDisk(mask, 4, 4, 0, 2);
    expect(mask.get(4, 4)).toBe(2);
    expect([...mask.data].filter((v) => v !== 0)).toHaveLength(1);
  });

  it("clips outside the canvas without error", () => {
    const mask = new MaskLayer(8, 8);
    stampDisk(mask, -2, -2, 3, 1);
    stampDisk(mask, 9, 9, 3, 1);
    expect(mask.get(0, 0)).toBe(1);
    expect(mask.get(7, 7)).toBe(1);
  });
});

describe("rasterizeStroke", () => {
  it("matches the disk-stamp oracle on a 16x16 canvas", () => {
    const stroke: Stroke = {
      points: [
        { x: 2.5, y: 3 },
        { x: 12, y: 4.5 },
        { x: 9, y: 12 },
      ],
      radius: 2.2,
      label: 4,
    };
    const mask = new MaskLayer(16, 16);
    rasterizeStroke(mask, stroke);
    const expected = oracleRaster(16, 16, strokeStampCenters(stroke.points), 2.2, 4);
    expect([...mask.data]).toEqual([...expected]);
  });

  it("covers a full-canvas stroke uniformly", () => {
    const mask = new MaskLayer(16, 16);
    rasterizeStroke(mask, {
      points: [
        { x: 8, y: 8 },
      ],
      radius: 32,
      label: 3,
    });
    expect([...mask.data].every((v) => v === 3)).toBe(true);
  });

  it("stamp centers include endpoints and step at most 0.5px", () => {
    const centers = strokeStampCenters([
      { x: 0, y: 0 },
      { x: 3, y: 0 },
    ]);
    expect(centers[0]).toEqual({ x: 0, y: 0 });
    expect(centers[centers.length - 1]).toEqual({ x: 3, y: 0 });
    for (let i = 1; i < centers.length; i++) {
      const d = Math.hypot(centers[i].x - centers[i - 1].x, centers[i].y - centers[i - 1].y);
      expect(d).toBeLessThanOrEqual(0.5 + 1e-9);
    }
  });

  it("rejects negative radius", () => {
    const mask = new MaskLayer(8, 8);
    expect(() =>
      rasterizeStroke(mask, { points: [{ x: 1, y: 1 }], radius: -1, label: 1 }),
    ).toThrow();
  });

  it("empty polyline is a no-op", () => {
    const mask = new MaskLayer(8, 8);
    rasterizeStroke(mask, { points: [], radius: 2, label: 1 });
    expect([...mask.data].every((v) => v === 0)).toBe(true);
  });
});
