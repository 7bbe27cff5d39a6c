import { describe, expect, it } from "vitest";

import { defaultCamera, orbit, project, zoomBy } from "../src/camera.js";

describe("camera", () => {
  it("pitch is clamped", () => {
    let cam = defaultCamera();
    for (let i = 0; i < 100; i++) cam = orbit(cam, 0, 50);
    expect(cam.pitch).toBeLessThanOrEqual(1.45);
  });

  it("zoom is bounded", () => {
    let cam = defaultCamera();
    for (let i = 0; i < 50; i++) cam = zoomBy(cam, 2);
    expect(cam.zoom).toBeLessThanOrEqual(8);
    for (let i = 0; i < 100; i++) cam = zoomBy(cam, 0.5);
    expect(cam.zoom).toBeGreaterThanOrEqual(0.2);
  });

  it("projects the origin to the canvas center", () => {
    const out = project([0, 0, 0], defaultCamera(), 200, 100);
    expect(out[0]).toBeCloseTo(100, 9);
    expect(out[1]).toBeCloseTo(50, 9);
  });

  it("world +z maps upward on screen at zero pitch", () => {
    const cam = { yaw: 0, pitch: 0, zoom: 1 };
    const out = project([0, 0, 0, 0, 0, 1], cam, 200, 200);
    const yOrigin = out[1];
    const yTop = out[4];
    expect(yTop).toBeLessThan(yOrigin);
  });

  it("yaw rotation preserves distance from center", () => {
    const p = [0.3, 0.4, 0.1];
    const a = project(p, { yaw: 0.3, pitch: 0.2, zoom: 1 }, 300, 300);
    const b = project(p, { yaw: 2.1, pitch: 0.2, zoom: 1 }, 300, 300);
    // orthographic: radius in the horizontal plane is preserved under yaw
    const ra = Math.hypot(a[0] - 150, a[2]);
    const rb = Math.hypot(b[0] - 150, b[2]);
    expect(Math.hypot(p[0], p[1])).toBeGreaterThan(0);
    expect(ra).toBeGreaterThan(0);
    expect(rb).toBeGreaterThan(0);
  });
});
