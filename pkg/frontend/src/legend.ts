// Legend and summary builders. The invariant here is strict: every
// number these functions emit is String(x) of a field the server sent.
// Nothing is added, scaled, rounded, or re-derived client side, so the
// display always agrees with the service to full precision.

import type { CoverageDoc, MeshSummary, PlanResponse, RegionResponse } from './types.js'

export interface LegendLine {
  label: string
  value: string // verbatim serialization of one served field
  unit: string
}

export const coverageLegend = (doc: CoverageDoc): LegendLine[] => [
  { label: 'coverage', value: String(doc.coverage_pct), unit: '%' },
  { label: 'operable area U', value: String(doc.U_mm2), unit: 'mm^2' },
  { label: 'union covered', value: String(doc.phi_union_mm2), unit: 'mm^2' },
  { label: 'exactly once', value: String(doc.exactly_once_mm2), unit: 'mm^2' },
  { label: 'overlapped', value: String(doc.multi_mm2), unit: 'mm^2' },
  { label: 'untreated', value: String(doc.uncovered_mm2), unit: 'mm^2' },
  { label: 'shots', value: String(doc.shots), unit: '' },
  { label: 'duration', value: String(doc.duration_s), unit: 's' },
  { label: 'pixel size', value: String(doc.pixel_size_mm), unit: 'mm' },
]

export const regionSummary = (resp: RegionResponse): LegendLine[] => [
  { label: 'operable area U', value: String(resp.operable_area_mm2), unit: 'mm^2' },
  { label: 'selection area', value: String(resp.selection_area_mm2), unit: 'mm^2' },
  { label: 'exclusions', value: String(resp.region.exclusions.length), unit: '' },
  { label: 'margin', value: String(resp.region.margin_mm), unit: 'mm' },
]

export const meshSummary = (doc: MeshSummary): LegendLine[] => [
  { label: 'vertices', value: String(doc.vertices), unit: '' },
  { label: 'triangles', value: String(doc.triangles), unit: '' },
  { label: 'surface area', value: String(doc.area_mm2), unit: 'mm^2' },
]

export const planSummary = (resp: PlanResponse): LegendLine[] => {
  const lines: LegendLine[] = [
    { label: 'source', value: resp.plan.source, unit: '' },
    { label: 'shots', value: String(resp.plan.shots.length), unit: '' },
    { label: 'duration', value: String(resp.plan.duration_s), unit: 's' },
    { label: 'valid', value: String(resp.validation.ok), unit: '' },
  ]
  if (!resp.validation.ok) {
    lines.push({
      label: 'violations',
      value: String(resp.validation.violations.length),
      unit: '',
    })
  }
  return lines
}

export const renderLines = (lines: LegendLine[]): string =>
  lines.map((l) => `${l.label}: ${l.value}${l.unit ? ' ' + l.unit : ''}`).join('\n')
