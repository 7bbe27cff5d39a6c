/** Orbit camera and orthographic projection for point-cloud rendering.
 * Pure math, no DOM. */

export interface Camera {
  yaw: number; // radians around +z
  pitch: number; // radians above the xy plane
  zoom: number;
}

export function defaultCamera(): Camera {
  return { yaw: -0.7, pitch: 0.35, zoom: 1.0 };
}

export function orbit(cam: Camera, dxPixels: number, dyPixels: number): Camera {
  const pitch = Math.min(1.45, Math.max(-1.45, cam.pitch + dyPixels * 0.008));
  return { yaw: cam.yaw + dxPixels * 0.008, pitch, zoom: cam.zoom };
}

export function zoomBy(cam: Camera, factor: number): Camera {
  return { ...cam, zoom: Math.min(8, Math.max(0.2, cam.zoom * factor)) };
}

/** Project a flat xyz array (z-up world) to screen space. Returns
 * [sx, sy, depth] triples; depth grows away from the viewer. */
export function project(
  flat: ArrayLike<number>,
  cam: Camera,
  width: number,
  height: number,
): Float64Array {
  const n = Math.floor(flat.length / 3);
  const out = new Float64Array(n * 3);
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  const scale = 0.42 * Math.min(width, height) * cam.zoom;
  for (let i = 0; i < n; i++) {
    const x = flat[i * 3];
    const y = flat[i * 3 + 1];
    const z = flat[i * 3 + 2];
    // yaw about z
    const rx = cy * x + sy * y;
    const ry = -sy * x + cy * y;
    // pitch about the screen-x axis; screen up follows world +z
    const vy = cp * ry + sp * z;
    const vz = -sp * ry + cp * z;
    out[i * 3] = width / 2 + scale * rx;
    out[i * 3 + 1] = height / 2 - scale * vz;
    out[i * 3 + 2] = -vy;
  }
  return out;
}
