/** Pure rendering of a class-id raster into a semi-transparent RGBA overlay.
 * The overlay is a deterministic function of (ids, palette, alpha), so any
 * two renderings of the same served mask are pixel-identical. */

import { Palette } from "./palette.js";

export const RESERVED_ID = 255;
export const DEFAULT_ALPHA = 170;

export function renderOverlay(
  ids: Uint8Array,
  width: number,
  height: number,
  palette: Palette,
  alpha: number = DEFAULT_ALPHA,
): Uint8ClampedArray<ArrayBuffer> {
  if (ids.length !== width * height) {
    throw new Error(
      `raster size ${ids.length} does not match ${width}x${height}`,
    );
  }
  const rgba = new Uint8ClampedArray(new ArrayBuffer(width * height * 4));
  for (let i = 0; i < ids.length; i++) {
    const id = ids[i];
    if (id === RESERVED_ID) {
      continue; // unlabeled stays fully transparent
    }
    const { r, g, b } = palette.color(id);
    const at = i * 4;
    rgba[at] = r;
    rgba[at + 1] = g;
    rgba[at + 2] = b;
    rgba[at + 3] = alpha;
  }
  return rgba;
}

/** Crosshair ring marking the outstanding proposal, drawn into RGBA. */
export function drawProposalMarker(
  rgba: Uint8ClampedArray,
  width: number,
  height: number,
  x: number,
  y: number,
  radius = 6,
): void {
  const put = (px: number, py: number) => {
    if (px < 0 || py < 0 || px >= width || py >= height) return;
    const at = (py * width + px) * 4;
    rgba[at] = 255;
    rgba[at + 1] = 255;
    rgba[at + 2] = 255;
    rgba[at + 3] = 255;
  };
  for (let d = -radius; d <= radius; d++) {
    if (Math.abs(d) > 1) {
      put(x + d, y);
      put(x, y + d);
    }
  }
  for (let t = 0; t < 64; t++) {
    const angle = (2 * Math.PI * t) / 64;
    put(Math.round(x + radius * Math.cos(angle)),
        Math.round(y + radius * Math.sin(angle)));
  }
}
