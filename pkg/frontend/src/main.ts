// Operator console wiring. All numbers on screen come from the service
// via the legend builders; this file only moves pixels and requests.

import { ConflictError, WorkbenchClient } from './api.js'
import { decodeHeatmapLayer, type HeatmapLayer } from './binary.js'
import { layerToRgba, type OverlayMode } from './colormap.js'
import {
  coverageLegend,
  meshSummary,
  planSummary,
  regionSummary,
  renderLines,
} from './legend.js'
import { parseRegion, PolygonDraft, serializeRegion, type SegmentPair } from './polygon.js'
import type {
  CoverageDoc,
  ExclusionDoc,
  PlanDoc,
  RegionDoc,
  RegionResponse,
  TrialStatus,
  Vertex,
} from './types.js'
import {
  canvasToUv,
  fitTo,
  initialView,
  uvToCanvas,
  withOverlay,
  withTool,
  type Tool,
  type ViewState,
} from './viewstate.js'

const client = new WorkbenchClient('')

const el = <T extends HTMLElement>(id: string): T => {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

const canvas = el<HTMLCanvasElement>('canvas')
const ctx = canvas.getContext('2d')!
const banner = el<HTMLDivElement>('banner')
const logBox = el<HTMLDivElement>('log')

let view: ViewState = initialView()
let draft = new PolygonDraft()
let badPair: SegmentPair | null = null
let regionDoc: RegionDoc | null = null
let regionResp: RegionResponse | null = null
let planDoc: PlanDoc | null = null
let layer: HeatmapLayer | null = null
let pendingExclusions: ExclusionDoc[] = []
let uvFit: { min: [number, number]; max: [number, number] } | null = null

const log = (msg: string): void => {
  const line = document.createElement('div')
  line.textContent = msg
  logBox.prepend(line)
}

const showBanner = (kind: 'conflict' | 'warn' | null, msg = ''): void => {
  banner.className = kind ?? ''
  banner.textContent = msg
  if (kind === 'conflict') {
    const btn = document.createElement('button')
    btn.textContent = 'reload'
    btn.onclick = () => location.reload()
    banner.append(' ', btn)
  }
}

// Mutating calls run one at a time; a 409 from a parallel client turns
// into the reload prompt instead of a silent retry.
let chain: Promise<void> = Promise.resolve()
const enqueue = (label: string, fn: () => Promise<void>): void => {
  chain = chain.then(async () => {
    try {
      await fn()
      showBanner(null)
    } catch (err) {
      if (err instanceof ConflictError) {
        view = { ...view, stale: true }
        showBanner('conflict', 'Session changed elsewhere; reload to re-sync.')
      } else {
        const msg = err instanceof Error ? err.message : String(err)
        if (msg.startsWith('zero operable area')) showBanner('warn', msg)
        log(`${label} failed: ${msg}`)
      }
    }
    draw()
  })
}

// --- drawing ------------------------------------------------------------

const sizeCanvas = (): void => {
  const rect = canvas.getBoundingClientRect()
  canvas.width = Math.max(100, Math.floor(rect.width))
  canvas.height = Math.max(100, Math.floor(rect.height))
}

const strokePath = (verts: Vertex[], close: boolean): void => {
  ctx.beginPath()
  verts.forEach(([u, v], i) => {
    const [x, y] = uvToCanvas(view.camera, canvas.width, canvas.height, u, v)
    if (i === 0) ctx.moveTo(x, y)
    else ctx.lineTo(x, y)
  })
  if (close) ctx.closePath()
  ctx.stroke()
}

const drawLayer = (): void => {
  if (!layer || !regionDoc || view.overlay === 'spots') return
  const rgba = new Uint8ClampedArray(layer.width * layer.height * 4)
  const src = layerToRgba(layer, view.overlay)
  // layer row 0 is min-v; ImageData row 0 is the top, so flip rows
  for (let r = 0; r < layer.height; r++) {
    const dst = (layer.height - 1 - r) * layer.width * 4
    rgba.set(src.subarray(r * layer.width * 4, (r + 1) * layer.width * 4), dst)
  }
  const img = new ImageData(rgba, layer.width, layer.height)
  const off = document.createElement('canvas')
  off.width = layer.width
  off.height = layer.height
  off.getContext('2d')!.putImageData(img, 0, 0)
  // anchor: the raster grid starts at the selection's min uv corner
  let u0 = Infinity
  let v0 = Infinity
  for (const [u, v] of regionDoc.selection) {
    if (u < u0) u0 = u
    if (v < v0) v0 = v
  }
  const wMm = layer.width * layer.pixelSizeMm
  const hMm = layer.height * layer.pixelSizeMm
  const [x, y] = uvToCanvas(view.camera, canvas.width, canvas.height, u0, v0 + hMm)
  ctx.imageSmoothingEnabled = false
  ctx.drawImage(off, x, y, wMm * view.camera.scale, hMm * view.camera.scale)
}

const drawSpots = (): void => {
  if (!planDoc || view.overlay !== 'spots') return
  const r = (planDoc.laser.spot_diameter_mm / 2) * view.camera.scale
  ctx.strokeStyle = planDoc.source === 'robot' ? '#7dd3fc' : '#fbbf24'
  ctx.lineWidth = 1
  for (const s of planDoc.shots) {
    // flat-patch display: shot x/y coincide with surface uv
    const [x, y] = uvToCanvas(view.camera, canvas.width, canvas.height, s.x, s.y)
    ctx.beginPath()
    ctx.arc(x, y, r, 0, 2 * Math.PI)
    ctx.stroke()
  }
}

const draw = (): void => {
  ctx.clearRect(0, 0, canvas.width, canvas.height)
  if (uvFit) {
    ctx.strokeStyle = '#3a4150'
    ctx.lineWidth = 1
    strokePath(
      [
        [uvFit.min[0], uvFit.min[1]],
        [uvFit.max[0], uvFit.min[1]],
        [uvFit.max[0], uvFit.max[1]],
        [uvFit.min[0], uvFit.max[1]],
      ],
      true,
    )
  }
  drawLayer()
  if (regionDoc) {
    ctx.strokeStyle = '#4ade80'
    ctx.lineWidth = 2
    strokePath(regionDoc.selection, true)
    ctx.strokeStyle = '#f87171'
    for (const z of regionDoc.exclusions) strokePath(z.boundary, true)
  }
  for (const z of pendingExclusions) {
    ctx.strokeStyle = '#f8717188'
    strokePath(z.boundary, true)
  }
  drawSpots()
  if (draft.vertices.length > 0) {
    ctx.strokeStyle = view.tool === 'mark-exclusion' ? '#f87171' : '#a3e635'
    ctx.lineWidth = 1.5
    strokePath(draft.vertices, false)
    if (badPair) {
      // paint the two crossing stroke edges for the inline rejection
      ctx.strokeStyle = '#ff2040'
      ctx.lineWidth = 3
      const n = draft.vertices.length
      for (const k of [badPair.a, badPair.b]) {
        strokePath([draft.vertices[k], draft.vertices[(k + 1) % n]], false)
      }
    }
  }
}

// --- actions --------------------------------------------------------------

const refreshCoverage = async (): Promise<void> => {
  if (!view.sessionId) return
  const report: CoverageDoc = await client.coverage(view.sessionId)
  el<HTMLPreElement>('coverage-info').textContent = renderLines(coverageLegend(report))
  const blob = await client.heatmap(view.sessionId)
  layer = decodeHeatmapLayer(blob)
}

el<HTMLInputElement>('mesh-file').addEventListener('change', (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0]
  if (!file) return
  const format = file.name.toLowerCase().endsWith('.obj') ? 'obj' : 'ply'
  enqueue('mesh upload', async () => {
    const bytes = await file.arrayBuffer()
    if (!view.sessionId) {
      view = { ...view, sessionId: (await client.createSession()).session_id }
    }
    const summary = await client.uploadMesh(view.sessionId!, bytes, format)
    el<HTMLPreElement>('mesh-info').textContent = renderLines(meshSummary(summary))
    uvFit = { min: summary.uv_bounds.min, max: summary.uv_bounds.max }
    view = fitTo(view, uvFit.min, uvFit.max, canvas.width, canvas.height)
    regionDoc = null
    regionResp = null
    planDoc = null
    layer = null
    pendingExclusions = []
    log(`mesh loaded: ${file.name}`)
  })
})

for (const radio of document.querySelectorAll<HTMLInputElement>('input[name=tool]')) {
  radio.addEventListener('change', () => {
    view = withTool(view, radio.value as Tool)
    draft.clear()
    badPair = null
    draw()
  })
}

el<HTMLSelectElement>('overlay').addEventListener('change', (ev) => {
  view = withOverlay(view, (ev.target as HTMLSelectElement).value as OverlayMode)
  draw()
})

canvas.addEventListener('click', (ev) => {
  if (view.tool === 'inspect') return
  const rect = canvas.getBoundingClientRect()
  const [u, v] = canvasToUv(
    view.camera,
    canvas.width,
    canvas.height,
    ev.clientX - rect.left,
    ev.clientY - rect.top,
  )
  draft.add(u, v)
  badPair = null
  draw()
})

el<HTMLButtonElement>('undo-vertex').addEventListener('click', () => {
  draft.undo()
  badPair = null
  draw()
})

el<HTMLButtonElement>('close-poly').addEventListener('click', () => {
  if (!draft.closable) return log('need at least 3 vertices')
  badPair = draft.validate()
  if (badPair) {
    showBanner('warn', `polygon self-intersects (edges ${badPair.a} and ${badPair.b})`)
    draw()
    return
  }
  const vertices = draft.vertices.map((p) => [p[0], p[1]] as Vertex)
  if (view.tool === 'mark-exclusion') {
    pendingExclusions.push({ label: 'custom', boundary: vertices })
    draft.clear()
    if (!regionDoc) return draw()
  } else {
    regionDoc = {
      selection: vertices,
      exclusions: pendingExclusions,
      margin_mm: regionDoc?.margin_mm ?? 5.0,
    }
    draft.clear()
  }
  postRegion()
})

const postRegion = (): void => {
  enqueue('region', async () => {
    if (!view.sessionId || !regionDoc) return
    regionDoc = { ...regionDoc, exclusions: pendingExclusions }
    regionResp = await client.setRegion(view.sessionId, regionDoc)
    regionDoc = regionResp.region // adopt the server echo verbatim
    pendingExclusions = regionDoc.exclusions
    planDoc = null
    layer = null
    el<HTMLPreElement>('region-info').textContent = renderLines(regionSummary(regionResp))
    log('region accepted')
  })
}

el<HTMLButtonElement>('do-plan').addEventListener('click', () => {
  enqueue('plan', async () => {
    if (!view.sessionId) throw new Error('no session')
    const pattern = el<HTMLSelectElement>('pattern').value as 'hex' | 'square'
    const resp = await client.plan(view.sessionId, { pattern })
    planDoc = resp.plan
    el<HTMLPreElement>('plan-info').textContent = renderLines(planSummary(resp))
    await refreshCoverage()
  })
})

el<HTMLButtonElement>('do-simulate').addEventListener('click', () => {
  enqueue('simulate', async () => {
    if (!view.sessionId) throw new Error('no session')
    const source = el<HTMLSelectElement>('source').value as 'robot' | 'human'
    const seed = Number(el<HTMLInputElement>('seed').value)
    const resp = await client.simulate(view.sessionId, { seed, source })
    planDoc = resp.plan
    el<HTMLPreElement>('plan-info').textContent =
      `source: ${resp.plan.source}\nseed: ${resp.seed}\n` +
      `shots: ${resp.plan.shots.length}\nduration: ${resp.plan.duration_s} s` +
      resp.plan.warnings.map((w) => `\nwarning: ${w}`).join('')
    await refreshCoverage()
  })
})

el<HTMLButtonElement>('save-region').addEventListener('click', () => {
  if (!regionDoc) return log('nothing to save')
  const blob = new Blob([serializeRegion(regionDoc)], { type: 'application/json' })
  const a = document.createElement('a')
  a.href = URL.createObjectURL(blob)
  a.download = 'region.json'
  a.click()
  URL.revokeObjectURL(a.href)
})

el<HTMLInputElement>('load-region').addEventListener('change', (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0]
  if (!file) return
  enqueue('region load', async () => {
    const doc = parseRegion(await file.text())
    regionDoc = doc
    pendingExclusions = doc.exclusions
    postRegion()
  })
})

el<HTMLButtonElement>('run-trial').addEventListener('click', () => {
  enqueue('trial', async () => {
    const { job_id } = await client.submitTrial()
    el<HTMLPreElement>('trial-info').textContent = `job ${job_id}: running`
    const poll = async (): Promise<void> => {
      const status: TrialStatus = await client.trialStatus(job_id)
      if (status.status === 'running') {
        setTimeout(() => void poll(), 500)
        return
      }
      if (status.status === 'failed') {
        el<HTMLPreElement>('trial-info').textContent = `job ${job_id}: failed\n${status.error}`
        return
      }
      const result = status.result as {
        tests: Record<string, { t: number; p: number }>
        aggregates: Array<{ side: string; metric: string; mean: number; sd: number }>
      }
      const lines = [`job ${job_id}: done`]
      for (const agg of result.aggregates) {
        lines.push(`${agg.side} ${agg.metric}: mean ${agg.mean} sd ${agg.sd}`)
      }
      for (const [metric, test] of Object.entries(result.tests)) {
        lines.push(`${metric}: t=${test.t} p=${test.p}`)
      }
      el<HTMLPreElement>('trial-info').textContent = lines.join('\n')
    }
    await poll()
  })
})

window.addEventListener('resize', () => {
  sizeCanvas()
  draw()
})
sizeCanvas()
draw()
log('select a PLY or OBJ surface to begin')
