/** Canvas point-sprite renderer: original and edited clouds colored by part
 * label, depth-sorted, with a shared orbit camera. */

import { Camera, project } from "./camera.js";
import type { ViewSettings } from "./state.js";

export const PART_COLORS = ["#e4572e", "#4f9d69", "#4062bb", "#ffc145"];
export const PART_NAMES = ["backrest", "seat", "legs", "armrest"];
const MONO_COLOR = "#9db4c0";

export function drawCloud(
  ctx: CanvasRenderingContext2D,
  points: number[],
  labels: number[] | null,
  cam: Camera,
  view: ViewSettings,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const projected = project(points, cam, width, height);
  const n = Math.floor(points.length / 3);
  const order = Array.from({ length: n }, (_, i) => i);
  order.sort((a, b) => projected[b * 3 + 2] - projected[a * 3 + 2]);
  const r = view.pointSize;
  for (const i of order) {
    const color = view.partColors && labels
      ? PART_COLORS[labels[i] % PART_COLORS.length]
      : MONO_COLOR;
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(projected[i * 3], projected[i * 3 + 1], r, 0, Math.PI * 2);
    ctx.fill();
  }
}

export interface Panel {
  canvas: HTMLCanvasElement;
  caption: string;
}

export function renderPair(
  original: Panel,
  edited: Panel,
  result: { original_points: number[]; original_labels: number[];
            edited_points: number[]; edited_labels: number[] } | null,
  cam: Camera,
  view: ViewSettings,
  onError: (message: string) => void,
): void {
  try {
    const octx = original.canvas.getContext("2d");
    const ectx = edited.canvas.getContext("2d");
    if (!octx || !ectx) throw new Error("canvas 2d context unavailable");
    if (!result) {
      octx.clearRect(0, 0, original.canvas.width, original.canvas.height);
      ectx.clearRect(0, 0, edited.canvas.width, edited.canvas.height);
      return;
    }
    if (view.sideBySide) {
      drawCloud(octx, result.original_points, result.original_labels, cam, view);
      drawCloud(ectx, result.edited_points, result.edited_labels, cam, view);
    } else {
      // overlay: edited over a faded original in the edited panel
      octx.clearRect(0, 0, original.canvas.width, original.canvas.height);
      ectx.save();
      drawCloud(ectx, result.original_points, null, cam,
                { ...view, partColors: false });
      ectx.globalAlpha = 0.85;
      const overlay = document.createElement("canvas");
      overlay.width = edited.canvas.width;
      overlay.height = edited.canvas.height;
      const otx = overlay.getContext("2d");
      if (otx) {
        drawCloud(otx, result.edited_points, result.edited_labels, cam, view);
        ectx.drawImage(overlay, 0, 0);
      }
      ectx.restore();
    }
  } catch (err) {
    onError(err instanceof Error ? err.message : String(err));
  }
}
