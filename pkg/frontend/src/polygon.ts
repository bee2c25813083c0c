// Polygon painting model. Vertices live in surface uv (mm), the same
// coordinate system the server plans in, so what you paint is exactly
// what gets posted. The simplicity check runs locally only to highlight
// the offending stroke segment; the server stays the authority.

import type { RegionDoc, Vertex } from './types.js'

export interface SegmentPair {
  a: number // index of first offending edge (vertex i -> i+1)
  b: number
}

const orient = (p: Vertex, q: Vertex, r: Vertex): number => {
  const v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
  if (v > 0) return 1
  if (v < 0) return -1
  return 0
}

const onSegment = (p: Vertex, q: Vertex, r: Vertex): boolean =>
  Math.min(p[0], r[0]) <= q[0] &&
  q[0] <= Math.max(p[0], r[0]) &&
  Math.min(p[1], r[1]) <= q[1] &&
  q[1] <= Math.max(p[1], r[1])

export const segmentsIntersect = (p1: Vertex, p2: Vertex, q1: Vertex, q2: Vertex): boolean => {
  const o1 = orient(p1, p2, q1)
  const o2 = orient(p1, p2, q2)
  const o3 = orient(q1, q2, p1)
  const o4 = orient(q1, q2, p2)
  if (o1 !== o2 && o3 !== o4) return true
  if (o1 === 0 && onSegment(p1, q1, p2)) return true
  if (o2 === 0 && onSegment(p1, q2, p2)) return true
  if (o3 === 0 && onSegment(q1, p1, q2)) return true
  if (o4 === 0 && onSegment(q1, p2, q2)) return true
  return false
}

/**
 * First pair of non-adjacent edges of the closed polygon that cross,
 * or null when the polygon is simple. Edge k runs from vertex k to
 * vertex (k+1) mod n.
 */
export const findSelfIntersection = (vertices: Vertex[]): SegmentPair | null => {
  const n = vertices.length
  if (n < 4) return null // a triangle cannot self-intersect
  for (let i = 0; i < n; i++) {
    for (let j = i + 2; j < n; j++) {
      if (i === 0 && j === n - 1) continue // closing edge is adjacent to edge 0
      if (
        segmentsIntersect(
          vertices[i],
          vertices[(i + 1) % n],
          vertices[j],
          vertices[(j + 1) % n],
        )
      ) {
        return { a: i, b: j }
      }
    }
  }
  return null
}

export class PolygonDraft {
  vertices: Vertex[] = []

  add(u: number, v: number): void {
    this.vertices.push([u, v])
  }

  undo(): void {
    this.vertices.pop()
  }

  clear(): void {
    this.vertices = []
  }

  get closable(): boolean {
    return this.vertices.length >= 3
  }

  /** Offending edge pair if closing now would self-intersect. */
  validate(): SegmentPair | null {
    return findSelfIntersection(this.vertices)
  }
}

// Save/reload uses plain JSON. JSON.stringify emits the shortest
// round-tripping decimal for every float64, so a parsed region carries
// the identical vertex list, bit for bit.

export const serializeRegion = (doc: RegionDoc): string => JSON.stringify(doc, null, 2)

export const parseRegion = (text: string): RegionDoc => {
  const doc = JSON.parse(text) as RegionDoc
  if (!Array.isArray(doc.selection)) throw new Error('region file: selection missing')
  for (const v of doc.selection) {
    if (!Array.isArray(v) || v.length !== 2) throw new Error('region file: bad vertex')
  }
  if (!Array.isArray(doc.exclusions)) doc.exclusions = []
  if (typeof doc.margin_mm !== 'number') throw new Error('region file: margin_mm missing')
  return doc
}
