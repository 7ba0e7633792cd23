/**
 * Deterministic 2048-d image encoder for fully offline runs.
 *
 * Decodes binary PGM (P5) / PPM (P6) images and pools a 16x16 spatial grid;
 * each cell contributes 8 channel statistics (mean R/G/B, mean and stddev
 * of luminance, mean horizontal/vertical gradient magnitude, luminance
 * range), giving 16*16*8 = 2048 features in [0, 1], a stand-in for a CNN
 * pooling layer that needs no downloaded weights.
 */

import * as fs from "fs";

import { IMAGE_DIM } from "./types";

export const IMAGE_ENCODER_NAME = "pool2048@v1";

const GRID = 16;
const STATS = 8;

interface RawImage {
  width: number;
  height: number;
  /** RGB triples, row-major, values in [0, 1] */
  pixels: Float64Array;
}

export function decodeNetpbm(buf: Buffer, path: string): RawImage {
  const magic = buf.subarray(0, 2).toString("ascii");
  if (magic !== "P5" && magic !== "P6") {
    throw new Error(`${path}: unsupported image format (need binary PGM/PPM)`);
  }
  // header: magic, width, height, maxval separated by whitespace/comments
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    if (pos >= buf.length) throw new Error(`${path}: truncated image header`);
    const c = String.fromCharCode(buf[pos]);
    if (c === "#") {
      while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      pos++;
    } else if (/\s/.test(c)) {
      pos++;
    } else {
      let start = pos;
      while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]))) pos++;
      const value = parseInt(buf.subarray(start, pos).toString("ascii"), 10);
      if (!Number.isFinite(value)) throw new Error(`${path}: bad header field`);
      fields.push(value);
    }
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (width < 1 || height < 1) throw new Error(`${path}: empty image`);
  if (maxval <= 0 || maxval > 255) {
    throw new Error(`${path}: unsupported maxval ${maxval}`);
  }
  const channels = magic === "P6" ? 3 : 1;
  const need = width * height * channels;
  if (buf.length - pos < need) {
    throw new Error(`${path}: truncated pixel data`);
  }
  const pixels = new Float64Array(width * height * 3);
  for (let i = 0; i < width * height; i++) {
    if (channels === 3) {
      pixels[3 * i] = buf[pos + 3 * i] / maxval;
      pixels[3 * i + 1] = buf[pos + 3 * i + 1] / maxval;
      pixels[3 * i + 2] = buf[pos + 3 * i + 2] / maxval;
    } else {
      const g = buf[pos + i] / maxval;
      pixels[3 * i] = pixels[3 * i + 1] = pixels[3 * i + 2] = g;
    }
  }
  return { width, height, pixels };
}

function luma(pixels: Float64Array, idx: number): number {
  return 0.299 * pixels[3 * idx] + 0.587 * pixels[3 * idx + 1] + 0.114 * pixels[3 * idx + 2];
}

export function encodeImageData(img: RawImage): Float64Array {
  const { width, height, pixels } = img;
  const out = new Float64Array(IMAGE_DIM);
  for (let gy = 0; gy < GRID; gy++) {
    const y0 = Math.floor((gy * height) / GRID);
    const y1 = Math.max(y0 + 1, Math.floor(((gy + 1) * height) / GRID));
    for (let gx = 0; gx < GRID; gx++) {
      const x0 = Math.floor((gx * width) / GRID);
      const x1 = Math.max(x0 + 1, Math.floor(((gx + 1) * width) / GRID));
      let sumR = 0, sumG = 0, sumB = 0, sumL = 0, sumL2 = 0;
      let sumDx = 0, sumDy = 0;
      let minL = Infinity, maxL = -Infinity;
      let count = 0;
      for (let y = y0; y < y1 && y < height; y++) {
        for (let x = x0; x < x1 && x < width; x++) {
          const idx = y * width + x;
          sumR += pixels[3 * idx];
          sumG += pixels[3 * idx + 1];
          sumB += pixels[3 * idx + 2];
          const l = luma(pixels, idx);
          sumL += l;
          sumL2 += l * l;
          minL = Math.min(minL, l);
          maxL = Math.max(maxL, l);
          if (x + 1 < width) sumDx += Math.abs(luma(pixels, idx + 1) - l);
          if (y + 1 < height) sumDy += Math.abs(luma(pixels, idx + width) - l);
          count++;
        }
      }
      const meanL = sumL / count;
      const varL = Math.max(0, sumL2 / count - meanL * meanL);
      const base = (gy * GRID + gx) * STATS;
      out[base] = sumR / count;
      out[base + 1] = sumG / count;
      out[base + 2] = sumB / count;
      out[base + 3] = meanL;
      out[base + 4] = Math.sqrt(varL);
      out[base + 5] = sumDx / count;
      out[base + 6] = sumDy / count;
      out[base + 7] = maxL - minL;
    }
  }
  return out;
}

export function encodeImageFile(path: string): Float64Array {
  let buf: Buffer;
  try {
    buf = fs.readFileSync(path);
  } catch (err) {
    throw new Error(`cannot read image ${path}: ${(err as Error).message}`);
  }
  return encodeImageData(decodeNetpbm(buf, path));
}
