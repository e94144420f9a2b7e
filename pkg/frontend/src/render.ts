// Pure pixel math for drawing grids, attention heatmaps, and mask overlays.
// Everything here returns plain RGBA byte arrays so it can be unit-tested
// without a DOM; main.ts copies them into canvases.

import type { DecodedGrid } from './lgrd.js';
import type { MaskJson } from './api.js';

export interface RgbaImage {
  width: number;
  height: number;
  /** RGBA bytes, 4 per pixel, row-major. */
  data: Uint8ClampedArray;
}

function byte(v: number): number {
  return Math.max(0, Math.min(255, Math.round(v)));
}

/**
 * Map a grid to pixels: one channel renders grayscale, three or more render
 * the first three channels as RGB. Values are scaled linearly over the
 * per-image min..max range; a flat image renders mid-gray.
 */
export function gridToRgba(g: DecodedGrid): RgbaImage {
  const { width, height } = g;
  const data = new Uint8ClampedArray(4 * width * height);
  const used = Math.min(3, g.channels);
  let lo = Infinity;
  let hi = -Infinity;
  const plane = height * width;
  for (let c = 0; c < used; c++) {
    for (let i = 0; i < plane; i++) {
      const v = g.values[c * plane + i] as number;
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  const span = hi - lo;
  for (let i = 0; i < plane; i++) {
    const px = 4 * i;
    for (let k = 0; k < 3; k++) {
      const c = used >= 3 ? k : 0;
      const v = g.values[c * plane + i] as number;
      data[px + k] = span > 0 ? byte(((v - lo) / span) * 255) : 128;
    }
    data[px + 3] = 255;
  }
  return { width, height, data };
}

/** Row-stochastic weights to a black-to-red-to-yellow heat ramp. */
export function heatmapToRgba(weights: number[][], width: number, height: number): RgbaImage {
  const data = new Uint8ClampedArray(4 * width * height);
  let hi = 0;
  for (const row of weights) for (const v of row) if (v > hi) hi = v;
  for (let y = 0; y < height; y++) {
    const row = weights[y];
    for (let x = 0; x < width; x++) {
      const t = hi > 0 ? (row?.[x] ?? 0) / hi : 0;
      const px = 4 * (y * width + x);
      data[px] = byte(255 * Math.min(1, 2 * t));
      data[px + 1] = byte(255 * Math.max(0, 2 * t - 1));
      data[px + 2] = 0;
      data[px + 3] = 255;
    }
  }
  return { width, height, data };
}

/** Blend a translucent color into masked pixels of a base image (in place). */
export function overlayMask(
  img: RgbaImage,
  mask: MaskJson,
  color: [number, number, number] = [64, 156, 255],
  alpha = 0.45,
): RgbaImage {
  if (mask.height !== img.height || mask.width !== img.width) {
    throw new Error('mask shape does not match image');
  }
  for (let y = 0; y < img.height; y++) {
    const bits = mask.bits[y];
    for (let x = 0; x < img.width; x++) {
      if (!bits?.[x]) continue;
      const px = 4 * (y * img.width + x);
      for (let k = 0; k < 3; k++) {
        const base = img.data[px + k] as number;
        img.data[px + k] = byte(base * (1 - alpha) + (color[k] as number) * alpha);
      }
    }
  }
  return img;
}

/** Pixel-size-preserving blend of a heatmap over a base image. */
export function blendHeatmap(base: RgbaImage, heat: RgbaImage, alpha = 0.5): RgbaImage {
  if (base.width !== heat.width || base.height !== heat.height) {
    throw new Error('heatmap shape does not match image');
  }
  const out = new Uint8ClampedArray(base.data);
  for (let i = 0; i < out.length; i += 4) {
    for (let k = 0; k < 3; k++) {
      const b = base.data[i + k] as number;
      const h = heat.data[i + k] as number;
      out[i + k] = byte(b * (1 - alpha) + h * alpha);
    }
  }
  return { width: base.width, height: base.height, data: out };
}
