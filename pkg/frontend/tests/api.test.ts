import { describe, expect, it } from 'vitest'

import { ApiError, ConflictError, WorkbenchClient } from '../src/api.js'

interface Call {
  url: string
  init?: RequestInit
}

const stubFetch = (status: number, body: unknown, calls: Call[]): typeof fetch =>
  (async (url: RequestInfo | URL, init?: RequestInit) => {
    calls.push({ url: String(url), init })
    const text = typeof body === 'string' ? body : JSON.stringify(body)
    return new Response(text, {
      status,
      headers: { 'content-type': 'application/json' },
    })
  }) as typeof fetch

describe('request shapes', () => {
  it('posts JSON bodies to the session endpoints', async () => {
    const calls: Call[] = []
    const client = new WorkbenchClient('http://h', stubFetch(200, { ok: 1 }, calls))
    await client.setRegion('s1', {
      selection: [[0, 0], [1, 0], [1, 1]],
      exclusions: [],
      margin_mm: 5,
    })
    await client.simulate('s1', { seed: 7, source: 'robot' })
    await client.coverage('s1', 0.25)

    expect(calls[0].url).toBe('http://h/sessions/s1/region')
    expect(calls[0].init?.method).toBe('POST')
    expect(JSON.parse(String(calls[0].init?.body)).margin_mm).toBe(5)
    expect(calls[1].url).toBe('http://h/sessions/s1/simulate')
    expect(JSON.parse(String(calls[1].init?.body))).toEqual({ seed: 7, source: 'robot' })
    expect(calls[2].url).toBe('http://h/sessions/s1/coverage?pixel=0.25')
    expect(calls[2].init?.method).toBeUndefined() // plain GET
  })

  it('sends mesh bytes with the format query', async () => {
    const calls: Call[] = []
    const client = new WorkbenchClient('', stubFetch(200, {}, calls))
    await client.uploadMesh('s2', new Uint8Array([112, 108, 121]), 'obj')
    expect(calls[0].url).toBe('/sessions/s2/mesh?format=obj')
    expect(calls[0].init?.headers).toMatchObject({ 'content-type': 'application/octet-stream' })
  })
})

describe('error mapping', () => {
  it('turns 409 into ConflictError with the server message', async () => {
    const client = new WorkbenchClient(
      '',
      stubFetch(409, { detail: "session 'abc' has a mutation in flight" }, []),
    )
    const err = await client.plan('abc').catch((e) => e)
    expect(err).toBeInstanceOf(ConflictError)
    expect(err.status).toBe(409)
    expect(err.message).toMatch(/mutation in flight/)
  })

  it('surfaces 422 domain messages', async () => {
    const client = new WorkbenchClient(
      '',
      stubFetch(
        422,
        { detail: { error: 'WorkbenchError', message: 'no region defined in this session' } },
        [],
      ),
    )
    const err = await client.coverage('abc').catch((e) => e)
    expect(err).toBeInstanceOf(ApiError)
    expect(err).not.toBeInstanceOf(ConflictError)
    expect(err.status).toBe(422)
    expect(err.message).toBe('no region defined in this session')
  })

  it('falls back to the status line for non-JSON error bodies', async () => {
    const client = new WorkbenchClient('http://h', stubFetch(500, 'boom', []))
    const err = await client.createSession().catch((e) => e)
    expect(err.status).toBe(500)
    expect(err.message).toMatch(/500 on \/sessions/)
  })

  it('stringifies FastAPI validation diagnostics', async () => {
    const client = new WorkbenchClient(
      '',
      stubFetch(400, { detail: [{ loc: ['body'], msg: 'value is not a valid dict' }] }, []),
    )
    const err = await client.plan('abc').catch((e) => e)
    expect(err.message).toMatch(/not a valid dict/)
  })
})
