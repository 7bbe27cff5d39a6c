import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import type { EditResponse } from "../src/api.js";
import {
  activeTerms, clampAlpha, EditScheduler, initialState,
} from "../src/state.js";

function fakeResponse(tag: number): EditResponse {
  return {
    object_id: "chair_0001",
    n: 1,
    original_points: [0, 0, 0],
    original_labels: [0],
    edited_points: [tag, 0, 0],
    edited_labels: [0],
    applied_terms: [],
    diagnostics: {
      latent_norm_before: 1,
      latent_norm_after: 1,
      signed_distances: {},
      periphery_warning: false,
    },
    sls: {},
  };
}

describe("clampAlpha", () => {
  it("clamps to the slider range and step", () => {
    expect(clampAlpha(9)).toBe(4);
    expect(clampAlpha(-9)).toBe(-4);
    expect(clampAlpha(1.2499)).toBeCloseTo(1.2, 10);
  });
});

describe("activeTerms", () => {
  it("drops zero sliders and tags dist_std units", () => {
    const state = initialState();
    state.sliders = { "legs/swivel": 2, "seat/wide": 0 };
    const terms = activeTerms(state);
    expect(terms).toEqual([
      { direction_id: "legs/swivel", alpha: 2, units: "dist_std" },
    ]);
  });
});

describe("EditScheduler", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("debounces rapid slider scrubbing into one request", async () => {
    const calls: number[][] = [];
    const state = initialState();
    state.selectedObject = "chair_0001";
    const scheduler = new EditScheduler(
      state,
      async (_, terms) => {
        calls.push(terms.map((t) => t.alpha));
        return fakeResponse(1);
      },
      () => {},
    );
    for (let i = 1; i <= 20; i++) {
      scheduler.setSlider("legs/swivel", i * 0.1);
      vi.advanceTimersByTime(30); // faster than the 150 ms debounce
    }
    expect(calls.length).toBe(0);
    await vi.advanceTimersByTimeAsync(200);
    expect(calls.length).toBe(1);
    expect(calls[0][0]).toBeCloseTo(2.0, 10);
  });

  it("caps request rate at roughly 1 per debounce window", async () => {
    const state = initialState();
    state.selectedObject = "chair_0001";
    let sent = 0;
    const scheduler = new EditScheduler(state, async () => {
      sent += 1;
      return fakeResponse(sent);
    }, () => {});
    // scrub continuously for one second
    for (let t = 0; t < 1000; t += 10) {
      scheduler.setSlider("legs/swivel", (t % 80) / 20);
      await vi.advanceTimersByTimeAsync(10);
    }
    await vi.advanceTimersByTimeAsync(300);
    expect(sent).toBeLessThanOrEqual(7); // ~7 requests/second at 150 ms
  });

  it("drops stale responses by sequence number", async () => {
    vi.useRealTimers();
    const state = initialState();
    state.selectedObject = "chair_0001";
    const resolvers: ((r: EditResponse) => void)[] = [];
    const scheduler = new EditScheduler(
      state,
      () => new Promise((resolve) => resolvers.push(resolve)),
      () => {},
      0,
    );
    const p1 = scheduler.requestNow();
    const p2 = scheduler.requestNow();
    expect(resolvers.length).toBe(2);
    // second (newer) response lands first; first must then be discarded
    resolvers[1](fakeResponse(2));
    await p2;
    resolvers[0](fakeResponse(1));
    await p1;
    expect(state.lastResult?.edited_points[0]).toBe(2);
  });

  it("keeps the last good result and records the error on failure", async () => {
    vi.useRealTimers();
    const state = initialState();
    state.selectedObject = "chair_0001";
    let fail = false;
    const scheduler = new EditScheduler(
      state,
      async () => {
        if (fail) throw new Error("network down");
        return fakeResponse(7);
      },
      () => {},
      0,
    );
    await scheduler.requestNow();
    expect(state.lastResult?.edited_points[0]).toBe(7);
    fail = true;
    await scheduler.requestNow();
    expect(state.error).toContain("network down");
    expect(state.lastResult?.edited_points[0]).toBe(7);
  });

  it("flags a stale workspace on http 409", async () => {
    vi.useRealTimers();
    const state = initialState();
    state.selectedObject = "chair_0001";
    const scheduler = new EditScheduler(
      state,
      async () => {
        const err = new Error("bank mismatch") as Error & { status: number };
        err.status = 409;
        throw err;
      },
      () => {},
      0,
    );
    await scheduler.requestNow();
    expect(state.staleWorkspace).toBe(true);
  });

  it("selecting an object resets sliders to zero", () => {
    const state = initialState();
    state.sliders = { "legs/swivel": 3 };
    const scheduler = new EditScheduler(state, async () => fakeResponse(0), () => {});
    scheduler.selectObject("chair_0002");
    expect(state.sliders["legs/swivel"]).toBe(0);
    expect(state.selectedObject).toBe("chair_0002");
  });
});
