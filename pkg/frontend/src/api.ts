// Thin fetch client for the workbench service. No math happens here:
// responses are decoded and passed through untouched.

import type {
  CoverageDoc,
  MeshSummary,
  PlanResponse,
  RegionDoc,
  RegionResponse,
  SessionCreated,
  SimulateResponse,
  TrialStatus,
  TrialSubmitted,
} from './types.js'

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message)
  }
}

/** 409: another mutation is in flight on this session. */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(409, message)
  }
}

const messageFrom = (body: unknown, fallback: string): string => {
  if (body && typeof body === 'object') {
    const b = body as Record<string, unknown>
    if (typeof b.message === 'string') return b.message
    if (typeof b.detail === 'string') return b.detail
    // domain errors arrive as detail: {error, message}
    if (b.detail && typeof b.detail === 'object') {
      const d = b.detail as Record<string, unknown>
      if (typeof d.message === 'string') return d.message
      return JSON.stringify(b.detail)
    }
    if (b.detail) return JSON.stringify(b.detail)
  }
  return fallback
}

export class WorkbenchClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init)
    if (resp.ok) return resp
    let body: unknown = null
    try {
      body = await resp.json()
    } catch {
      // non-JSON error body; fall through with the status line
    }
    const message = messageFrom(body, `${resp.status} on ${path}`)
    if (resp.status === 409) throw new ConflictError(message)
    throw new ApiError(resp.status, message)
  }

  private async getJson<T>(path: string): Promise<T> {
    return (await this.request(path)).json() as Promise<T>
  }

  private async postJson<T>(path: string, body?: unknown): Promise<T> {
    const resp = await this.request(path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: body === undefined ? '{}' : JSON.stringify(body),
    })
    return resp.json() as Promise<T>
  }

  async createSession(): Promise<SessionCreated> {
    return this.postJson('/sessions')
  }

  async uploadMesh(
    sessionId: string,
    bytes: ArrayBuffer | Uint8Array,
    format: 'ply' | 'obj' = 'ply',
  ): Promise<MeshSummary> {
    const resp = await this.request(`/sessions/${sessionId}/mesh?format=${format}`, {
      method: 'POST',
      headers: { 'content-type': 'application/octet-stream' },
      body: bytes as BodyInit,
    })
    return resp.json() as Promise<MeshSummary>
  }

  async setRegion(sessionId: string, region: RegionDoc): Promise<RegionResponse> {
    return this.postJson(`/sessions/${sessionId}/region`, region)
  }

  async getRegion(sessionId: string): Promise<RegionResponse> {
    return this.getJson(`/sessions/${sessionId}/region`)
  }

  async plan(
    sessionId: string,
    options: { pattern?: 'hex' | 'square'; boundary_policy?: string } = {},
  ): Promise<PlanResponse> {
    return this.postJson(`/sessions/${sessionId}/plan`, options)
  }

  async simulate(
    sessionId: string,
    options: { seed: number; stream?: string; source?: 'robot' | 'human' },
  ): Promise<SimulateResponse> {
    return this.postJson(`/sessions/${sessionId}/simulate`, options)
  }

  async coverage(sessionId: string, pixel?: number): Promise<CoverageDoc> {
    const q = pixel === undefined ? '' : `?pixel=${pixel}`
    return this.getJson(`/sessions/${sessionId}/coverage${q}`)
  }

  async heatmap(sessionId: string, pixel?: number): Promise<ArrayBuffer> {
    const q = pixel === undefined ? '' : `?pixel=${pixel}`
    const resp = await this.request(`/sessions/${sessionId}/heatmap${q}`)
    return resp.arrayBuffer()
  }

  async submitTrial(config?: unknown): Promise<TrialSubmitted> {
    return this.postJson('/trials', config)
  }

  async trialStatus(jobId: string): Promise<TrialStatus> {
    return this.getJson(`/trials/${jobId}`)
  }
}
