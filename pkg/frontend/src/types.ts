// Wire types for the workbench HTTP API. Field names mirror the JSON
// exactly; every number here is server-computed and displayed as-is.

export interface SessionCreated {
  session_id: string
}

export interface MeshSummary {
  vertices: number
  triangles: number
  area_mm2: number
  uv_bounds: { min: [number, number]; max: [number, number] }
}

export type Vertex = [number, number]

export interface ExclusionDoc {
  label: string
  boundary: Vertex[]
}

export interface RegionDoc {
  selection: Vertex[]
  exclusions: ExclusionDoc[]
  margin_mm: number
}

export interface RegionResponse {
  operable_area_mm2: number
  selection_area_mm2: number
  region: RegionDoc
}

export interface LaserDoc {
  wavelength_nm: number
  spot_diameter_mm: number
  fluence_mj_cm2: number
}

export interface ShotDoc {
  x: number
  y: number
  z: number
  nx: number
  ny: number
  nz: number
  t: number
}

export interface PlanDoc {
  format: string
  source: 'robot' | 'human'
  standoff_mm: number
  laser: LaserDoc
  duration_s: number
  warnings: string[]
  shots: ShotDoc[]
}

export interface ViolationDoc {
  kind: string
  shots: number[]
  detail: string
}

export interface ValidationDoc {
  ok: boolean
  violations: ViolationDoc[]
}

export interface PlanResponse {
  plan: PlanDoc
  validation: ValidationDoc
}

export interface SimulateResponse {
  plan: PlanDoc
  seed: number
  stream: string
}

export interface CoverageDoc {
  U_mm2: number
  phi_union_mm2: number
  exactly_once_mm2: number
  multi_mm2: number
  uncovered_mm2: number
  coverage_pct: number
  shots: number
  duration_s: number
  pixel_size_mm: number
  metric: string
}

export interface TrialSubmitted {
  job_id: string
}

export interface TrialStatus {
  status: 'running' | 'done' | 'failed'
  result?: unknown
  error?: string
}

export interface ErrorBody {
  message?: string
  error?: string
  detail?: unknown
}
