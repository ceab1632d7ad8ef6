/** Categorical label raster. One byte per pixel, row-major. */
export class MaskLayer {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, data?: Uint8Array) {
    if (width <= 0 || height <= 0) {
      throw new Error(`mask size must be positive, got ${width}x${height}`);
    }
    if (data !== undefined && data.length !== width * height) {
      throw new Error(`data length ${data.length} != ${width * height}`);
    }
    this.width = width;
    this.height = height;
    this.data = data ?? new Uint8Array(width * height);
  }

  inBounds(x: number, y: number): boolean {
    return x >= 0 && y >= 0 && x < this.width && y < this.height;
  }

  get(x: number, y: number): number {
    if (!this.inBounds(x, y)) throw new Error(`(${x}, ${y}) out of bounds`);
    return this.data[y * this.width + x];
  }

  set(x: number, y: number, label: number): void {
    if (!this.inBounds(x, y)) return; // out-of-canvas writes are clipped
    this.data[y * this.width + x] = label;
  }

  fill(label: number): void {
    this.data.fill(label);
  }

  clone(): MaskLayer {
    return new MaskLayer(this.width, this.height, this.data.slice());
  }

  equals(other: MaskLayer): boolean {
    if (other.width !== this.width || other.height !== this.height) return false;
    for (let i = 0; i < this.data.length; i++) {
      if (this.data[i] !== other.data[i]) return false;
    }
    return true;
  }
}
