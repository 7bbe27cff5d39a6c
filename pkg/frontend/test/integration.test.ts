/** End-to-end contract tests against the real Python service.
 *
 * Builds (or reuses) a small workspace via the CLI, starts the server on a
 * free port, and checks the UI-facing guarantees: an empty-terms edit is
 * byte-identical to the original decode, and the SLS displayed for a
 * slider edit equals the CLI's value for the same (object, alpha, seed).
 */
import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync, existsSync, mkdirSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";

const REPO = resolve(__dirname, "..", "..");
const WS = process.env.WEBUI_TEST_WORKSPACE
  ?? join(REPO, "tests", "_cache", "webui_ws");
const PORT = 8761;
const PYTHON = process.env.PYTHON ?? "python3";

const SMALL_CONFIG = {
  seed: 41,
  generation: { n_train: 24, n_holdout: 8, n_points: 128, part_points: 64 },
  part_ae: { latent_dim: 8, point_dims: [3, 16, 32, 32], decoder_hidden: [64, 96],
             train: { epochs: 3, batch_size: 8, lr: 2e-3 } },
  object_ae: { latent_dim: 12, point_dims: [3, 16, 32, 32], decoder_hidden: [64, 96],
               train: { epochs: 3, batch_size: 8, lr: 2e-3 } },
  segmenter: { point_dims: [3, 16, 32, 32], head_dims: [32, 16],
               train: { epochs: 3, batch_size: 8, lr: 2e-3 } },
  classifier: { point_dims: [3, 12, 24], n_points: 64,
                train: { epochs: 3, batch_size: 16, lr: 3e-3 } },
  clustering: { min_size_floor: 2, min_fraction: 0.04 },
  evaluation: { n_samples: 6, baseline_components: 4, match_probes: 4,
                flip_samples: 4 },
  ablation: { n_mixed: 4, subclass_min_count: 3 },
};

let server: ReturnType<typeof spawn> | null = null;
const client = new Client(`http://127.0.0.1:${PORT}`);

async function waitForHealth(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastErr: unknown = null;
  while (Date.now() < deadline) {
    try {
      await client.health();
      return;
    } catch (err) {
      lastErr = err;
      await new Promise((r) => setTimeout(r, 300));
    }
  }
  throw new Error(`service did not come up: ${lastErr}`);
}

beforeAll(async () => {
  if (!existsSync(join(WS, "workspace.json"))
      || !existsSync(join(WS, "reports", "evaluation.json"))) {
    mkdirSync(WS, { recursive: true });
    const cfgPath = join(mkdtempSync(join(tmpdir(), "webui-cfg-")), "config.json");
    writeFileSync(cfgPath, JSON.stringify(SMALL_CONFIG));
    const build = spawnSync(
      PYTHON, ["-m", "partnav.cli", "--workspace", WS, "--config", cfgPath, "pipeline"],
      { cwd: REPO, encoding: "utf-8", timeout: 600_000 },
    );
    if (build.status !== 0) {
      throw new Error(`pipeline build failed:\n${build.stdout}\n${build.stderr}`);
    }
  }
  server = spawn(
    PYTHON,
    ["-m", "partnav.cli", "--workspace", WS, "serve",
     "--host", "127.0.0.1", "--port", String(PORT)],
    { cwd: REPO, stdio: ["ignore", "pipe", "pipe"] },
  );
  await waitForHealth(60_000);
}, 700_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("service contract", () => {
  it("reports health with a checkpoint hash", async () => {
    const health = await client.health();
    expect(health.checkpoint_hash).toMatch(/^[0-9a-f]{64}$/);
  });

  it("empty-terms edit is byte-identical to the original decode", async () => {
    const objects = (await client.objects(1)).objects;
    const id = objects[0].id;
    const edit = await client.edit(id, []);
    expect(edit.edited_points).toEqual(edit.original_points);
    const detail = await client.object(id);
    expect(edit.edited_points).toEqual(detail.points);
    expect(edit.edited_labels).toEqual(detail.labels);
  });

  it("slider-driven SLS matches the CLI value for the same edit", async () => {
    const objects = (await client.objects(1)).objects;
    const id = objects[0].id;
    const direction = (await client.semantics()).directions[0];
    const alpha = 2.0;
    const viaApi = await client.edit(id, [
      { direction_id: direction.id, alpha, units: "dist_std" },
    ]);
    const out = spawnSync(
      PYTHON,
      ["-m", "partnav.cli", "--workspace", WS, "edit",
       "--object", id, "--term", `${direction.id}:${alpha}`,
       "--out", join(tmpdir(), "webui-edit.ply")],
      { cwd: REPO, encoding: "utf-8", timeout: 120_000 },
    );
    expect(out.status).toBe(0);
    const viaCli = JSON.parse(out.stdout);
    expect(Object.keys(viaCli.sls)).toEqual(Object.keys(viaApi.sls));
    for (const part of Object.keys(viaApi.sls)) {
      const a = viaApi.sls[part];
      const b = viaCli.sls[part];
      if (typeof a === "number" && typeof b === "number") {
        expect(Math.abs(a - b)).toBeLessThanOrEqual(1e-12 * Math.max(1, Math.abs(a)));
      } else {
        expect(a).toEqual(b);
      }
    }
    expect(viaCli.applied_terms).toEqual(viaApi.applied_terms);
  });

  it("unknown direction id in a slider edit surfaces a 404", async () => {
    const objects = (await client.objects(1)).objects;
    await expect(client.edit(objects[0].id, [
      { direction_id: "legs/imaginary", alpha: 1, units: "dist_std" },
    ])).rejects.toMatchObject({ status: 404 });
  });
}, 200_000);
