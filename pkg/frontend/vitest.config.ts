import { defineConfig } from 'vitest/config'

export default defineConfig({
  test: {
    environment: 'node',
    // e2e spins up the Python service and runs real trials
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
})
