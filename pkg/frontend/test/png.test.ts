import { describe, expect, it } from "vitest";

import {
  adler32,
  crc32,
  decodeIndexedPng,
  encodeIndexedPng,
  Palette,
  zlibStored,
  zlibStoredInflate,
} from "../src/png.js";

const PALETTE: Palette = [
  [0, 0, 0],
  [228, 185, 142],
  [65, 105, 225],
  [46, 139, 87],
  [199, 56, 79],
  [96, 57, 153],
];

describe("checksums", () => {
  it("crc32 matches the reference value for 'IEND'", () => {
    const iend = new Uint8Array([0x49, 0x45, 0x4e, 0x44]);
    expect(crc32(iend)).toBe(0xae426082);
  });

  it("adler32 matches the reference value for 'Wikipedia'", () => {
    const bytes = new Uint8Array([...("Wikipedia" as any)].map((c: string) => c.charCodeAt(0)));
    expect(adler32(bytes)).toBe(0x11e60398);
  });
});

describe("zlib stored blocks", () => {
  it("round-trips arbitrary bytes", () => {
    const raw = new Uint8Array(200000).map((_, i) => (i * 7 + 3) & 0xff);
    const packed = zlibStored(raw);
    expect([...zlibStoredInflate(packed)]).toEqual([...raw]);
  });

  it("detects checksum corruption", () => {
    const packed = zlibStored(new Uint8Array([1, 2, 3]));
    packed[packed.length - 1] ^= 0xff;
    expect(() => zlibStoredInflate(packed)).toThrow(/checksum/);
  });
});

describe("indexed PNG codec", () => {
  it("encode/decode round-trips pixels and palette bit-exactly", () => {
    const w = 16;
    const h = 12;
    const data = new Uint8Array(w * h).map((_, i) => i % PALETTE.length);
    const png = encodeIndexedPng(w, h, data, PALETTE);
    const decoded = decodeIndexedPng(png);
    expect(decoded.width).toBe(w);
    expect(decoded.height).toBe(h);
    expect([...decoded.data]).toEqual([...data]);
    expect(decoded.palette).toEqual(PALETTE);
  });

  it("encoding is deterministic", () => {
    const data = new Uint8Array(64).fill(3);
    const a = encodeIndexedPng(8, 8, data, PALETTE);
    const b = encodeIndexedPng(8, 8, data, PALETTE);
    expect([...a]).toEqual([...b]);
  });

  it("starts with the PNG signature and IHDR", () => {
    const png = encodeIndexedPng(4, 4, new Uint8Array(16), PALETTE);
    expect([...png.slice(0, 8)]).toEqual([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
    expect(String.fromCharCode(...png.slice(12, 16))).toBe("IHDR");
  });

  it("rejects mismatched buffer size", () => {
    expect(() => encodeIndexedPng(4, 4, new Uint8Array(15), PALETTE)).toThrow();
  });

  it("detects CRC corruption on decode", () => {
    const png = encodeIndexedPng(4, 4, new Uint8Array(16), PALETTE);
    png[20] ^= 0x01; // flip a bit inside IHDR's body
    expect(() => decodeIndexedPng(png)).toThrow(/CRC/);
  });

  it("survives masks wider than one stored block", () => {
    const w = 300;
    const h = 300; // 300*301 raw bytes > 65535: multiple stored blocks
    const data = new Uint8Array(w * h).map((_, i) => (i >> 5) % PALETTE.length);
    const decoded = decodeIndexedPng(encodeIndexedPng(w, h, data, PALETTE));
    expect([...decoded.data]).toEqual([...data]);
  });
});
