/**
 * Parser for the packed .splat format: 32 bytes per Gaussian primitive,
 * position (3 x float32), scale (3 x float32), RGBA color (4 x uint8),
 * rotation quaternion (4 x uint8, unused by the point approximation).
 */

export const SPLAT_RECORD_BYTES = 32;

export interface SplatCloud {
  count: number;
  positions: Float32Array; // xyz per primitive
  colors: Float32Array; // rgb in [0, 1] per primitive
  averageScale: number;
}

export function parseSplat(buffer: ArrayBuffer): SplatCloud {
  if (buffer.byteLength % SPLAT_RECORD_BYTES !== 0) {
    throw new Error(`splat payload is not a multiple of ${SPLAT_RECORD_BYTES} bytes`);
  }
  const count = buffer.byteLength / SPLAT_RECORD_BYTES;
  const floats = new Float32Array(buffer);
  const bytes = new Uint8Array(buffer);
  const positions = new Float32Array(count * 3);
  const colors = new Float32Array(count * 3);
  let scaleSum = 0;
  for (let i = 0; i < count; i++) {
    const f = i * 8; // 8 floats per record
    positions[i * 3] = floats[f]!;
    positions[i * 3 + 1] = floats[f + 1]!;
    positions[i * 3 + 2] = floats[f + 2]!;
    scaleSum += (Math.abs(floats[f + 3]!) + Math.abs(floats[f + 4]!) + Math.abs(floats[f + 5]!)) / 3;
    const b = i * SPLAT_RECORD_BYTES + 24;
    colors[i * 3] = bytes[b]! / 255;
    colors[i * 3 + 1] = bytes[b + 1]! / 255;
    colors[i * 3 + 2] = bytes[b + 2]! / 255;
  }
  return {
    count,
    positions,
    colors,
    averageScale: count > 0 ? scaleSum / count : 0,
  };
}
