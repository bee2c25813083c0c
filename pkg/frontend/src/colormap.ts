// Client-side coloring of the server's hit-count layer. This is pure
// presentation: pixels are colored, nothing is measured or aggregated.

import type { HeatmapLayer } from './binary.js'

// 9-stop viridis ramp, linearly interpolated
const STOPS: ReadonlyArray<readonly [number, number, number]> = [
  [68, 1, 84],
  [72, 40, 120],
  [62, 74, 137],
  [49, 104, 142],
  [38, 130, 142],
  [31, 158, 137],
  [53, 183, 121],
  [109, 205, 89],
  [253, 231, 37],
]

export const viridis = (t: number): readonly [number, number, number] => {
  const clamped = Math.max(0, Math.min(1, t))
  const pos = clamped * (STOPS.length - 1)
  const i = Math.min(STOPS.length - 2, Math.floor(pos))
  const f = pos - i
  const a = STOPS[i]
  const b = STOPS[i + 1]
  return [
    Math.round(a[0] + f * (b[0] - a[0])),
    Math.round(a[1] + f * (b[1] - a[1])),
    Math.round(a[2] + f * (b[2] - a[2])),
  ]
}

export type OverlayMode = 'spots' | 'union' | 'exactly-once' | 'dose'

/**
 * RGBA pixels for one overlay mode. Zero-count pixels stay transparent
 * so the region mask shows through underneath.
 */
export const layerToRgba = (layer: HeatmapLayer, mode: OverlayMode): Uint8ClampedArray => {
  const { width, height, counts } = layer
  const out = new Uint8ClampedArray(width * height * 4)
  let maxCount = 1
  for (let i = 0; i < counts.length; i++) if (counts[i] > maxCount) maxCount = counts[i]
  for (let i = 0; i < counts.length; i++) {
    const c = counts[i]
    const o = i * 4
    let rgb: readonly [number, number, number] | null = null
    if (mode === 'union') {
      if (c > 0) rgb = [53, 183, 121]
    } else if (mode === 'exactly-once') {
      if (c === 1) rgb = [53, 183, 121]
      else if (c > 1) rgb = [253, 100, 37]
    } else if (mode === 'dose') {
      if (c > 0) rgb = viridis(c / maxCount)
    }
    if (rgb) {
      out[o] = rgb[0]
      out[o + 1] = rgb[1]
      out[o + 2] = rgb[2]
      out[o + 3] = 200
    }
  }
  return out
}
