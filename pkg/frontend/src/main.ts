/** Application wiring: object picker, per-semantic alpha sliders, the
 * side-by-side viewer, and the diagnostics strip. */

import { Client, SemanticDirectionInfo } from "./api.js";
import { Camera, defaultCamera, orbit, zoomBy } from "./camera.js";
import { renderPair } from "./render.js";
import {
  EditScheduler, EditorState, initialState, SLIDER_MAX, SLIDER_MIN,
  SLIDER_STEP,
} from "./state.js";

const client = new Client("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fmt(x: number): string {
  return (Math.round(x * 1000) / 1000).toFixed(3);
}

async function boot(): Promise<void> {
  const state: EditorState = initialState();
  let cam: Camera = defaultCamera();

  const originalCanvas = el<HTMLCanvasElement>("original-canvas");
  const editedCanvas = el<HTMLCanvasElement>("edited-canvas");
  const errorBanner = el<HTMLDivElement>("error-banner");
  const staleModal = el<HTMLDivElement>("stale-modal");
  const peripheryBadge = el<HTMLSpanElement>("periphery-badge");
  const slsLine = el<HTMLDivElement>("sls-line");
  const diagLine = el<HTMLDivElement>("diag-line");

  const redraw = () => {
    renderPair(
      { canvas: originalCanvas, caption: "original" },
      { canvas: editedCanvas, caption: "edited" },
      state.lastResult, cam, state.view,
      (message) => {
        errorBanner.textContent = `render error: ${message}`;
        errorBanner.style.display = "block";
      },
    );
  };

  const onChange = (s: EditorState) => {
    errorBanner.style.display = s.error ? "block" : "none";
    if (s.error) errorBanner.textContent = `request failed: ${s.error} (last good view kept)`;
    staleModal.style.display = s.staleWorkspace ? "flex" : "none";
    document.body.classList.toggle("busy", s.busy);
    if (s.lastResult) {
      const d = s.lastResult.diagnostics;
      peripheryBadge.style.display = d.periphery_warning ? "inline-block" : "none";
      const slsText = Object.entries(s.lastResult.sls)
        .map(([part, v]) => `part ${part}: ${typeof v === "number" ? fmt(v) : v}`)
        .join("   ");
      slsLine.textContent = slsText ? `SLS vs original   ${slsText}` : "SLS: move a slider";
      const dists = Object.entries(d.signed_distances)
        .map(([k, [before, after]]) => `${k}: ${fmt(before)} -> ${fmt(after)}`)
        .join("   ");
      diagLine.textContent =
        `|z| ${fmt(d.latent_norm_before)} -> ${fmt(d.latent_norm_after)}` +
        (dists ? `   hyperplane distance ${dists}` : "");
    }
    redraw();
  };

  const scheduler = new EditScheduler(
    state,
    (objectId, terms) => client.edit(objectId, terms),
    onChange,
  );

  // ---- semantics sliders
  const semantics = (await client.semantics()).directions;
  const sliderHost = el<HTMLDivElement>("sliders");
  const byPart = new Map<number, SemanticDirectionInfo[]>();
  semantics.forEach((s) => {
    const group = byPart.get(s.part) ?? [];
    group.push(s);
    byPart.set(s.part, group);
  });
  const partNames = ["backrest", "seat", "legs", "armrest"];
  [...byPart.keys()].sort().forEach((part) => {
    const heading = document.createElement("h3");
    heading.textContent = partNames[part] ?? `part ${part}`;
    sliderHost.appendChild(heading);
    for (const s of byPart.get(part)!) {
      state.sliders[s.id] = 0;
      const row = document.createElement("div");
      row.className = "slider-row";
      const label = document.createElement("label");
      label.textContent = `${s.id} (acc ${fmt(s.accuracy)})`;
      const value = document.createElement("span");
      value.className = "alpha-value";
      value.textContent = "0.0";
      const input = document.createElement("input");
      input.type = "range";
      input.min = String(SLIDER_MIN);
      input.max = String(SLIDER_MAX);
      input.step = String(SLIDER_STEP);
      input.value = "0";
      input.addEventListener("input", () => {
        value.textContent = Number(input.value).toFixed(1);
        scheduler.setSlider(s.id, Number(input.value));
      });
      row.append(label, input, value);
      sliderHost.appendChild(row);
    }
  });

  // ---- object picker
  const picker = el<HTMLSelectElement>("object-picker");
  const objects = (await client.objects(12)).objects;
  objects.forEach((o) => {
    const opt = document.createElement("option");
    opt.value = o.id;
    opt.textContent = o.id;
    picker.appendChild(opt);
  });
  picker.addEventListener("change", () => {
    sliderHost.querySelectorAll<HTMLInputElement>("input[type=range]")
      .forEach((input) => { input.value = "0"; });
    sliderHost.querySelectorAll<HTMLSpanElement>(".alpha-value")
      .forEach((span) => { span.textContent = "0.0"; });
    scheduler.selectObject(picker.value);
  });

  // ---- view controls
  el<HTMLInputElement>("toggle-colors").addEventListener("change", (ev) => {
    state.view.partColors = (ev.target as HTMLInputElement).checked;
    redraw();
  });
  el<HTMLInputElement>("toggle-side").addEventListener("change", (ev) => {
    state.view.sideBySide = (ev.target as HTMLInputElement).checked;
    redraw();
  });
  el<HTMLInputElement>("point-size").addEventListener("input", (ev) => {
    state.view.pointSize = Number((ev.target as HTMLInputElement).value);
    redraw();
  });
  el<HTMLButtonElement>("stale-reload").addEventListener("click", () => {
    window.location.reload();
  });

  // ---- orbit / zoom on both canvases
  for (const canvas of [originalCanvas, editedCanvas]) {
    let dragging = false;
    let last: [number, number] = [0, 0];
    canvas.addEventListener("mousedown", (ev) => {
      dragging = true;
      last = [ev.clientX, ev.clientY];
    });
    window.addEventListener("mouseup", () => { dragging = false; });
    window.addEventListener("mousemove", (ev) => {
      if (!dragging) return;
      cam = orbit(cam, ev.clientX - last[0], ev.clientY - last[1]);
      last = [ev.clientX, ev.clientY];
      redraw();
    });
    canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      cam = zoomBy(cam, ev.deltaY < 0 ? 1.1 : 1 / 1.1);
      redraw();
    }, { passive: false });
  }

  if (objects.length) {
    picker.value = objects[0].id;
    scheduler.selectObject(objects[0].id);
  }
}

boot().catch((err) => {
  const banner = document.getElementById("error-banner");
  if (banner) {
    banner.textContent = `failed to start: ${err instanceof Error ? err.message : err}`;
    (banner as HTMLElement).style.display = "block";
  }
});
