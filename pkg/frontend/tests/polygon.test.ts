import { describe, expect, it } from 'vitest'

import {
  findSelfIntersection,
  parseRegion,
  PolygonDraft,
  segmentsIntersect,
  serializeRegion,
} from '../src/polygon.js'
import type { RegionDoc, Vertex } from '../src/types.js'

describe('segment intersection', () => {
  it('detects a proper crossing', () => {
    expect(segmentsIntersect([0, 0], [2, 2], [0, 2], [2, 0])).toBe(true)
  })

  it('detects an endpoint touch', () => {
    expect(segmentsIntersect([0, 0], [2, 0], [1, 0], [1, 2])).toBe(true)
  })

  it('clears disjoint parallel segments', () => {
    expect(segmentsIntersect([0, 0], [2, 0], [0, 1], [2, 1])).toBe(false)
  })
})

describe('polygon simplicity', () => {
  it('accepts a convex quad and a triangle', () => {
    const quad: Vertex[] = [[0, 0], [4, 0], [4, 3], [0, 3]]
    expect(findSelfIntersection(quad)).toBeNull()
    expect(findSelfIntersection(quad.slice(0, 3))).toBeNull()
  })

  it('accepts a jagged but simple outline', () => {
    const zig: Vertex[] = [[0, 0], [5, 1], [6, 4], [3, 3], [1, 5], [-1, 2]]
    expect(findSelfIntersection(zig)).toBeNull()
  })

  it('flags the bowtie with the crossing edge pair', () => {
    // edges 0 (0,0)->(4,0) and 2 (4,3)->(0,3) are fine; the crossing is
    // edge 1 (4,0)->(0,3) against edge 3 (0,3)... listed pair must name
    // two non-adjacent edges that really cross
    const bowtie: Vertex[] = [[0, 0], [4, 0], [0, 3], [4, 3]]
    const pair = findSelfIntersection(bowtie)
    expect(pair).not.toBeNull()
    const { a, b } = pair!
    const n = bowtie.length
    expect(
      segmentsIntersect(bowtie[a], bowtie[(a + 1) % n], bowtie[b], bowtie[(b + 1) % n]),
    ).toBe(true)
    expect(b - a).toBeGreaterThan(1) // non-adjacent
  })

  it('does not flag the shared corner of adjacent edges', () => {
    const square: Vertex[] = [[0, 0], [1, 0], [1, 1], [0, 1]]
    expect(findSelfIntersection(square)).toBeNull()
  })
})

describe('draft workflow', () => {
  it('builds up, undoes, and validates', () => {
    const d = new PolygonDraft()
    d.add(0, 0)
    d.add(4, 0)
    expect(d.closable).toBe(false)
    d.add(0, 3)
    d.add(4, 3) // bowtie
    expect(d.closable).toBe(true)
    expect(d.validate()).not.toBeNull()
    d.undo()
    expect(d.validate()).toBeNull()
  })
})

describe('region save/reload', () => {
  it('round-trips every vertex exactly, including awkward floats', () => {
    const doc: RegionDoc = {
      selection: [
        [0.1 + 0.2, 25.000000000000004],
        [40 / 3, 1e-13],
        [17.125, 33.33333333333333],
        [2.220446049250313e-16, 50],
      ],
      exclusions: [
        { label: 'eyes', boundary: [[10.1, 10.2], [12.3, 10.2], [11.0007, 13.5]] },
      ],
      margin_mm: 5.5,
    }
    const text = serializeRegion(doc)
    const back = parseRegion(text)
    expect(back).toEqual(doc)
    // and the reloaded copy serializes to the identical byte string
    expect(serializeRegion(back)).toBe(text)
  })

  it('rejects malformed region files', () => {
    expect(() => parseRegion('{"selection": 3, "margin_mm": 1}')).toThrow(/selection/)
    expect(() => parseRegion('{"selection": [[1,2],[3]], "margin_mm": 1}')).toThrow(/vertex/)
    expect(() => parseRegion('{"selection": [[1,2],[3,4],[5,6]]}')).toThrow(/margin/)
  })
})
