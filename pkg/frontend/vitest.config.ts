import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // the live-service test spawns a real server; give it room
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
