// Decoder for the binary heatmap layer served by GET .../heatmap:
// little-endian u32 width, u32 height, f32 pixel_size_mm, then
// width*height u32 hit counts, row-major from the minimum-v row.

export interface HeatmapLayer {
  width: number
  height: number
  pixelSizeMm: number
  counts: Uint32Array
}

export const HEADER_BYTES = 12

export const decodeHeatmapLayer = (blob: ArrayBuffer): HeatmapLayer => {
  if (blob.byteLength < HEADER_BYTES) {
    throw new Error(`heatmap layer too short: ${blob.byteLength} bytes`)
  }
  const view = new DataView(blob)
  const width = view.getUint32(0, true)
  const height = view.getUint32(4, true)
  const pixelSizeMm = view.getFloat32(8, true)
  const expected = HEADER_BYTES + width * height * 4
  if (blob.byteLength !== expected) {
    throw new Error(
      `heatmap layer size mismatch: ${blob.byteLength} bytes for ${width}x${height} grid`,
    )
  }
  // counts start at byte 12, already 4-aligned
  const counts = new Uint32Array(blob, HEADER_BYTES, width * height)
  return { width, height, pixelSizeMm, counts }
}
