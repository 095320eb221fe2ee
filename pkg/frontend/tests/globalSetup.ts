import { ChildProcess, spawn } from "node:child_process";
import { dirname, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import { TEST_BASE_URL, TEST_PORT } from "./server.js";

const REPO_ROOT = resolve(dirname(fileURLToPath(import.meta.url)), "..", "..");
const BOOT_TIMEOUT_MS = 30_000;

async function waitForHealth(): Promise<void> {
  const deadline = Date.now() + BOOT_TIMEOUT_MS;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${TEST_BASE_URL}/api/v1/health`);
      if (response.ok) {
        return;
      }
    } catch {
      // Server not accepting connections yet.
    }
    await new Promise((tick) => setTimeout(tick, 100));
  }
  throw new Error(`service did not come up on port ${TEST_PORT}`);
}

export default async function setup(): Promise<() => Promise<void>> {
  const server: ChildProcess = spawn(
    "python3",
    [
      "-m",
      "uvicorn",
      "textshape.service:app",
      "--host",
      "127.0.0.1",
      "--port",
      String(TEST_PORT),
      "--log-level",
      "warning",
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "inherit", "inherit"] },
  );
  const exited = new Promise<void>((done) => {
    server.once("exit", () => done());
  });
  try {
    await waitForHealth();
  } catch (error) {
    server.kill("SIGKILL");
    throw error;
  }
  return async () => {
    server.kill("SIGTERM");
    await Promise.race([
      exited,
      new Promise<void>((done) =>
        setTimeout(() => {
          server.kill("SIGKILL");
          done();
        }, 5_000),
      ),
    ]);
  };
}
