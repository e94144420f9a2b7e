// Decoder for the binary latent-grid wire format served by the edit API.
//
// Layout: 4-byte ASCII magic "LGRD", then channels/height/width as u32
// little-endian, then channels*height*width f32 little-endian values in
// channel-major, row-major order.

export interface DecodedGrid {
  channels: number;
  height: number;
  width: number;
  /** Flat values, index = (c * height + y) * width + x. */
  values: Float32Array;
}

const MAGIC = 0x4c475244; // "LGRD" read as big-endian u32

const HEADER_BYTES = 16;

export function decodeGrid(buf: ArrayBuffer): DecodedGrid {
  if (buf.byteLength < HEADER_BYTES) {
    throw new Error(`grid blob too short: ${buf.byteLength} bytes`);
  }
  const view = new DataView(buf);
  if (view.getUint32(0, false) !== MAGIC) {
    throw new Error('bad magic: expected "LGRD"');
  }
  const channels = view.getUint32(4, true);
  const height = view.getUint32(8, true);
  const width = view.getUint32(12, true);
  const count = channels * height * width;
  if (channels === 0 || height === 0 || width === 0) {
    throw new Error(`degenerate grid shape ${channels}x${height}x${width}`);
  }
  const expected = HEADER_BYTES + 4 * count;
  if (buf.byteLength !== expected) {
    throw new Error(`grid blob is ${buf.byteLength} bytes, expected ${expected}`);
  }
  const values = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    values[i] = view.getFloat32(HEADER_BYTES + 4 * i, true);
  }
  return { channels, height, width, values };
}

export function gridValueAt(g: DecodedGrid, c: number, x: number, y: number): number {
  if (c < 0 || c >= g.channels || x < 0 || x >= g.width || y < 0 || y >= g.height) {
    throw new Error(`index (${c},${x},${y}) out of bounds`);
  }
  return g.values[(c * g.height + y) * g.width + x] as number;
}
