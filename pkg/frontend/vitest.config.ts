import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // The e2e suite boots the real engine process before talking to it.
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
