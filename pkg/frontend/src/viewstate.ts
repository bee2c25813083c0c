// View state for the operator console: camera, active tool, overlay
// mode, and the linked session. Pure data + transition helpers so the
// DOM layer stays thin.

import type { OverlayMode } from './colormap.js'

export type Tool = 'select-region' | 'mark-exclusion' | 'inspect'

export interface Camera {
  // uv mm of the canvas center and px-per-mm zoom
  centerU: number
  centerV: number
  scale: number
}

export interface ViewState {
  sessionId: string | null
  tool: Tool
  overlay: OverlayMode
  camera: Camera
  /** set when a 409 told us someone else mutated the session */
  stale: boolean
}

export const initialView = (): ViewState => ({
  sessionId: null,
  tool: 'select-region',
  overlay: 'spots',
  camera: { centerU: 0, centerV: 0, scale: 6 },
  stale: false,
})

export const withTool = (s: ViewState, tool: Tool): ViewState => ({ ...s, tool })

export const withOverlay = (s: ViewState, overlay: OverlayMode): ViewState => ({
  ...s,
  overlay,
})

export const panBy = (s: ViewState, du: number, dv: number): ViewState => ({
  ...s,
  camera: { ...s.camera, centerU: s.camera.centerU + du, centerV: s.camera.centerV + dv },
})

export const zoomBy = (s: ViewState, factor: number): ViewState => ({
  ...s,
  camera: {
    ...s.camera,
    scale: Math.max(0.5, Math.min(64, s.camera.scale * factor)),
  },
})

/** Fit the camera to a uv bounding box with a small border. */
export const fitTo = (
  s: ViewState,
  min: [number, number],
  max: [number, number],
  canvasW: number,
  canvasH: number,
): ViewState => {
  const w = Math.max(1e-9, max[0] - min[0])
  const h = Math.max(1e-9, max[1] - min[1])
  const scale = Math.min(canvasW / (w * 1.1), canvasH / (h * 1.1))
  return {
    ...s,
    camera: {
      centerU: (min[0] + max[0]) / 2,
      centerV: (min[1] + max[1]) / 2,
      scale,
    },
  }
}

// uv <-> canvas px. v points up in uv, down in canvas.
export const uvToCanvas = (
  cam: Camera,
  canvasW: number,
  canvasH: number,
  u: number,
  v: number,
): [number, number] => [
  canvasW / 2 + (u - cam.centerU) * cam.scale,
  canvasH / 2 - (v - cam.centerV) * cam.scale,
]

export const canvasToUv = (
  cam: Camera,
  canvasW: number,
  canvasH: number,
  x: number,
  y: number,
): [number, number] => [
  cam.centerU + (x - canvasW / 2) / cam.scale,
  cam.centerV - (y - canvasH / 2) / cam.scale,
]
