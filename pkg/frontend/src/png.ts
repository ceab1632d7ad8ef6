/**
 * Minimal indexed (palette) PNG codec, dependency-free.
 *
 * The encoder emits color-type-3 PNGs with a zlib stream made of stored
 * (uncompressed) deflate blocks, so masks travel bit-exactly and every
 * byte is deterministic. The decoder handles exactly that subset, plus
 * it validates CRCs — enough to round-trip our own files in tests; the
 * browser's native decoder handles arbitrary PNGs at runtime.
 */

const PNG_SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];
const MAX_STORED_BLOCK = 0xffff;

let CRC_TABLE: Uint32Array | null = null;

function crcTable(): Uint32Array {
  if (CRC_TABLE) return CRC_TABLE;
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  CRC_TABLE = table;
  return table;
}

export function crc32(bytes: Uint8Array): number {
  const table = crcTable();
  let c = 0xffffffff;
  for (let i = 0; i < bytes.length; i++) {
    c = table[(c ^ bytes[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

export function adler32(bytes: Uint8Array): number {
  let a = 1;
  let b = 0;
  for (let i = 0; i < bytes.length; i++) {
    a = (a + bytes[i]) % 65521;
    b = (b + a) % 65521;
  }
  return ((b << 16) | a) >>> 0;
}

function u32be(v: number): number[] {
  return [(v >>> 24) & 0xff, (v >>> 16) & 0xff, (v >>> 8) & 0xff, v & 0xff];
}

function chunk(type: string, body: Uint8Array): number[] {
  const typed = new Uint8Array(4 + body.length);
  for (let i = 0; i < 4; i++) typed[i] = type.charCodeAt(i);
  typed.set(body, 4);
  return [...u32be(body.length), ...typed, ...u32be(crc32(typed))];
}

/** zlib wrapper around stored deflate blocks. */
export function zlibStored(raw: Uint8Array): Uint8Array {
  const out: number[] = [0x78, 0x01];
  let off = 0;
  do {
    const len = Math.min(MAX_STORED_BLOCK, raw.length - off);
    const final = off + len >= raw.length ? 1 : 0;
    out.push(final, len & 0xff, (len >>> 8) & 0xff, ~len & 0xff, (~len >>> 8) & 0xff);
    for (let i = 0; i < len; i++) out.push(raw[off + i]);
    off += len;
  } while (off < raw.length);
  const adler = adler32(raw);
  out.push(...u32be(adler));
  return new Uint8Array(out);
}

export function zlibStoredInflate(z: Uint8Array): Uint8Array {
  if (z.length < 6 || (z[0] & 0x0f) !== 8) throw new Error("not a zlib stream");
  const out: number[] = [];
  let pos = 2;
  for (;;) {
    const header = z[pos++];
    if ((header & 0x06) !== 0) throw new Error("only stored deflate blocks supported");
    const len = z[pos] | (z[pos + 1] << 8);
    const nlen = z[pos + 2] | (z[pos + 3] << 8);
    if ((len ^ 0xffff) !== nlen) throw new Error("corrupt stored block header");
    pos += 4;
    for (let i = 0; i < len; i++) out.push(z[pos + i]);
    pos += len;
    if (header & 1) break;
  }
  const raw = new Uint8Array(out);
  const adler = ((z[pos] << 24) | (z[pos + 1] << 16) | (z[pos + 2] << 8) | z[pos + 3]) >>> 0;
  if (adler !== adler32(raw)) throw new Error("zlib checksum mismatch");
  return raw;
}

export type Palette = Array<[number, number, number]>;

export function encodeIndexedPng(
  width: number,
  height: number,
  data: Uint8Array,
  palette: Palette,
): Uint8Array {
  if (data.length !== width * height) {
    throw new Error(`pixel buffer ${data.length} != ${width}x${height}`);
  }
  if (palette.length === 0 || palette.length > 256) {
    throw new Error(`palette must have 1..256 entries, got ${palette.length}`);
  }
  const ihdr = new Uint8Array([
    ...u32be(width),
    ...u32be(height),
    8, // bit depth
    3, // color type: indexed
    0, 0, 0, // compression, filter, interlace
  ]);
  const plte = new Uint8Array(palette.length * 3);
  palette.forEach(([r, g, b], i) => {
    plte[i * 3] = r;
    plte[i * 3 + 1] = g;
    plte[i * 3 + 2] = b;
  });
  // scanlines: filter byte 0 + raw indices
  const raw = new Uint8Array(height * (width + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (width + 1)] = 0;
    raw.set(data.subarray(y * width, (y + 1) * width), y * (width + 1) + 1);
  }
  const bytes = [
    ...PNG_SIGNATURE,
    ...chunk("IHDR", ihdr),
    ...chunk("PLTE", plte),
    ...chunk("IDAT", zlibStored(raw)),
    ...chunk("IEND", new Uint8Array(0)),
  ];
  return new Uint8Array(bytes);
}

export interface DecodedPng {
  width: number;
  height: number;
  data: Uint8Array;
  palette: Palette;
}

export function decodeIndexedPng(bytes: Uint8Array): DecodedPng {
  for (let i = 0; i < 8; i++) {
    if (bytes[i] !== PNG_SIGNATURE[i]) throw new Error("bad PNG signature");
  }
  let pos = 8;
  let width = 0;
  let height = 0;
  let palette: Palette = [];
  const idat: number[] = [];
  while (pos < bytes.length) {
    const len = ((bytes[pos] << 24) | (bytes[pos + 1] << 16) | (bytes[pos + 2] << 8) | bytes[pos + 3]) >>> 0;
    const type = String.fromCharCode(bytes[pos + 4], bytes[pos + 5], bytes[pos + 6], bytes[pos + 7]);
    const body = bytes.subarray(pos + 8, pos + 8 + len);
    const typed = bytes.subarray(pos + 4, pos + 8 + len);
    const stored = ((bytes[pos + 8 + len] << 24) | (bytes[pos + 9 + len] << 16) |
      (bytes[pos + 10 + len] << 8) | bytes[pos + 11 + len]) >>> 0;
    if (crc32(typed) !== stored) throw new Error(`CRC mismatch in ${type}`);
    if (type === "IHDR") {
      width = ((body[0] << 24) | (body[1] << 16) | (body[2] << 8) | body[3]) >>> 0;
      height = ((body[4] << 24) | (body[5] << 16) | (body[6] << 8) | body[7]) >>> 0;
      if (body[8] !== 8 || body[9] !== 3) throw new Error("only 8-bit indexed PNGs supported");
    } else if (type === "PLTE") {
      palette = [];
      for (let i = 0; i + 2 < body.length; i += 3) {
        palette.push([body[i], body[i + 1], body[i + 2]]);
      }
    } else if (type === "IDAT") {
      for (let i = 0; i < body.length; i++) idat.push(body[i]);
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + len;
  }
  const raw = zlibStoredInflate(new Uint8Array(idat));
  const data = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    if (raw[y * (width + 1)] !== 0) throw new Error("only filter type 0 supported");
    data.set(raw.subarray(y * (width + 1) + 1, (y + 1) * (width + 1)), y * width);
  }
  return { width, height, data, palette };
}
