import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: { url: "http://localhost:3000" },
    },
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
