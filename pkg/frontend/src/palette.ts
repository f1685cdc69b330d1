/** Class palette: legend-file colors with a deterministic fallback. */

import { LegendEntry } from "./types.js";

export interface Rgb {
  r: number;
  g: number;
  b: number;
}

const FALLBACK: Rgb[] = [
  { r: 230, g: 25, b: 75 }, { r: 60, g: 180, b: 75 },
  { r: 255, g: 225, b: 25 }, { r: 0, g: 130, b: 200 },
  { r: 245, g: 130, b: 48 }, { r: 145, g: 30, b: 180 },
  { r: 70, g: 240, b: 240 }, { r: 240, g: 50, b: 230 },
  { r: 210, g: 245, b: 60 }, { r: 250, g: 190, b: 212 },
  { r: 0, g: 128, b: 128 }, { r: 220, g: 190, b: 255 },
  { r: 170, g: 110, b: 40 }, { r: 255, g: 250, b: 200 },
  { r: 128, g: 0, b: 0 }, { r: 170, g: 255, b: 195 },
];

export function parseHexColor(hex: string): Rgb {
  const match = /^#?([0-9a-fA-F]{6})$/.exec(hex.trim());
  if (!match) {
    throw new Error(`bad hex color ${hex}`);
  }
  const value = parseInt(match[1], 16);
  return { r: (value >> 16) & 0xff, g: (value >> 8) & 0xff, b: value & 0xff };
}

export class Palette {
  private readonly colors = new Map<number, Rgb>();
  private readonly names = new Map<number, string>();

  constructor(legend: LegendEntry[] = []) {
    for (const entry of legend) {
      this.colors.set(entry.id, parseHexColor(entry.color));
      this.names.set(entry.id, entry.name);
    }
  }

  color(classId: number): Rgb {
    return this.colors.get(classId) ?? FALLBACK[classId % FALLBACK.length];
  }

  name(classId: number): string {
    return this.names.get(classId) ?? `class-${classId}`;
  }

  /** Class ids offered by the on-screen palette, legend order. */
  entries(): Array<{ id: number; name: string; color: Rgb }> {
    return [...this.colors.keys()].map((id) => ({
      id,
      name: this.name(id),
      color: this.color(id),
    }));
  }
}
