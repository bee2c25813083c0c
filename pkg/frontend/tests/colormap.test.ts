import { describe, expect, it } from 'vitest'

import type { HeatmapLayer } from '../src/binary.js'
import { layerToRgba, viridis } from '../src/colormap.js'

const layerOf = (counts: number[], width: number): HeatmapLayer => ({
  width,
  height: counts.length / width,
  pixelSizeMm: 0.2,
  counts: Uint32Array.from(counts),
})

describe('viridis ramp', () => {
  it('hits the dark and bright ends', () => {
    expect(viridis(0)).toEqual([68, 1, 84])
    expect(viridis(1)).toEqual([253, 231, 37])
  })

  it('clamps out-of-range inputs', () => {
    expect(viridis(-3)).toEqual(viridis(0))
    expect(viridis(42)).toEqual(viridis(1))
  })

  it('is monotone in green through the middle', () => {
    const g = [0.1, 0.3, 0.5, 0.7, 0.9].map((t) => viridis(t)[1])
    for (let i = 1; i < g.length; i++) expect(g[i]).toBeGreaterThan(g[i - 1])
  })
})

describe('overlay rasterization', () => {
  const layer = layerOf([0, 1, 2, 3], 2)

  it('keeps zero-count pixels transparent in every mode', () => {
    for (const mode of ['union', 'exactly-once', 'dose'] as const) {
      const rgba = layerToRgba(layer, mode)
      expect(rgba[3]).toBe(0) // first pixel has count 0
    }
  })

  it('union mode paints any hit the same color', () => {
    const rgba = layerToRgba(layer, 'union')
    const one = Array.from(rgba.slice(4, 8))
    const three = Array.from(rgba.slice(12, 16))
    expect(one).toEqual(three)
    expect(one[3]).toBeGreaterThan(0)
  })

  it('exactly-once mode separates single from multiple hits', () => {
    const rgba = layerToRgba(layer, 'exactly-once')
    const single = Array.from(rgba.slice(4, 7))
    const double = Array.from(rgba.slice(8, 11))
    expect(single).not.toEqual(double)
  })

  it('dose mode brightens with count', () => {
    const rgba = layerToRgba(layer, 'dose')
    // green channel of viridis rises with intensity
    expect(rgba[4 * 3 + 1]).toBeGreaterThan(rgba[4 * 1 + 1])
  })
})
