/** Minimal decoder for the masks the service serves: 8-bit grayscale,
 * non-interlaced PNG.  Runs in browsers and Node 20+ via the standard
 * DecompressionStream; no canvas, so decoded class ids are exact. */

const PNG_SIGNATURE = [137, 80, 78, 71, 13, 10, 26, 10];

export interface GrayPng {
  width: number;
  height: number;
  /** Row-major class ids, length width * height. */
  ids: Uint8Array;
}

async function inflate(data: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([data as BlobPart])
    .stream()
    .pipeThrough(new DecompressionStream("deflate"));
  const out = new Uint8Array(await new Response(stream).arrayBuffer());
  return out;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export async function decodeGrayscalePng(bytes: Uint8Array): Promise<GrayPng> {
  if (bytes.length < 8 || !PNG_SIGNATURE.every((v, i) => bytes[i] === v)) {
    throw new Error("not a PNG file");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let offset = 8;
  let width = 0;
  let height = 0;
  const idat: Uint8Array[] = [];
  while (offset + 8 <= bytes.length) {
    const length = view.getUint32(offset);
    const type = String.fromCharCode(
      bytes[offset + 4], bytes[offset + 5], bytes[offset + 6], bytes[offset + 7],
    );
    const body = bytes.subarray(offset + 8, offset + 8 + length);
    if (type === "IHDR") {
      width = view.getUint32(offset + 8);
      height = view.getUint32(offset + 12);
      const bitDepth = bytes[offset + 16];
      const colorType = bytes[offset + 17];
      const interlace = bytes[offset + 20];
      if (bitDepth !== 8 || colorType !== 0) {
        throw new Error(
          `expected 8-bit grayscale, got depth ${bitDepth} color type ${colorType}`,
        );
      }
      if (interlace !== 0) {
        throw new Error("interlaced PNG not supported");
      }
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    offset += 12 + length; // length + type + body + crc
  }
  if (!width || !height) {
    throw new Error("missing IHDR");
  }
  const compressed = new Uint8Array(idat.reduce((n, c) => n + c.length, 0));
  let at = 0;
  for (const chunk of idat) {
    compressed.set(chunk, at);
    at += chunk.length;
  }
  const raw = await inflate(compressed);
  const stride = width + 1; // one filter byte per scanline, 1 byte per pixel
  if (raw.length < stride * height) {
    throw new Error("truncated PNG pixel data");
  }
  const ids = new Uint8Array(width * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * stride];
    const line = raw.subarray(y * stride + 1, y * stride + 1 + width);
    const row = ids.subarray(y * width, (y + 1) * width);
    const prev = y > 0 ? ids.subarray((y - 1) * width, y * width) : null;
    for (let x = 0; x < width; x++) {
      const left = x > 0 ? row[x - 1] : 0;
      const up = prev ? prev[x] : 0;
      const upLeft = prev && x > 0 ? prev[x - 1] : 0;
      let value = line[x];
      switch (filter) {
        case 0: break;
        case 1: value += left; break;
        case 2: value += up; break;
        case 3: value += (left + up) >> 1; break;
        case 4: value += paeth(left, up, upLeft); break;
        default: throw new Error(`unknown PNG filter ${filter}`);
      }
      row[x] = value & 0xff;
    }
  }
  return { width, height, ids };
}
