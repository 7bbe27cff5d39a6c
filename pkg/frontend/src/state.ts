/** Editor state and the request discipline around it: slider moves are
 * debounced, every in-flight edit carries a sequence number, and responses
 * arriving out of order are dropped so the view always shows the latest
 * completed edit. */

import type { EditResponse, EditTermPayload } from "./api.js";

export const SLIDER_MIN = -4;
export const SLIDER_MAX = 4;
export const SLIDER_STEP = 0.1;
export const DEBOUNCE_MS = 150;

export interface ViewSettings {
  pointSize: number;
  partColors: boolean;
  sideBySide: boolean;
}

export interface EditorState {
  selectedObject: string | null;
  sliders: Record<string, number>;
  lastResult: EditResponse | null;
  error: string | null;
  staleWorkspace: boolean;
  busy: boolean;
  view: ViewSettings;
}

export function initialState(): EditorState {
  return {
    selectedObject: null,
    sliders: {},
    lastResult: null,
    error: null,
    staleWorkspace: false,
    busy: false,
    view: { pointSize: 2.5, partColors: true, sideBySide: true },
  };
}

export function clampAlpha(value: number): number {
  const clamped = Math.min(SLIDER_MAX, Math.max(SLIDER_MIN, value));
  return Math.round(clamped / SLIDER_STEP) * SLIDER_STEP;
}

export function activeTerms(state: EditorState): EditTermPayload[] {
  return Object.entries(state.sliders)
    .filter(([, alpha]) => alpha !== 0)
    .map(([direction_id, alpha]) => ({ direction_id, alpha, units: "dist_std" as const }));
}

export interface EditRequester {
  (objectId: string, terms: EditTermPayload[]): Promise<EditResponse>;
}

type Listener = (state: EditorState) => void;

/** Drives edits against the service with debouncing and stale-response
 * rejection. The timer and clock are injectable for tests. */
export class EditScheduler {
  private nextSeq = 0;
  private appliedSeq = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    readonly state: EditorState,
    private readonly requester: EditRequester,
    private readonly onChange: Listener,
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {}

  selectObject(id: string): void {
    this.state.selectedObject = id;
    this.state.sliders = Object.fromEntries(
      Object.keys(this.state.sliders).map((k) => [k, 0]),
    );
    this.requestNow();
  }

  setSlider(directionId: string, value: number): void {
    this.state.sliders[directionId] = clampAlpha(value);
    this.schedule();
  }

  /** Debounce: collapse rapid slider movement into one request. */
  private schedule(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.requestNow();
    }, this.debounceMs);
  }

  requestNow(): Promise<void> {
    if (this.state.selectedObject === null) return Promise.resolve();
    const seq = ++this.nextSeq;
    this.state.busy = true;
    this.onChange(this.state);
    return this.requester(this.state.selectedObject, activeTerms(this.state))
      .then((result) => {
        if (seq <= this.appliedSeq) return; // stale response, drop
        this.appliedSeq = seq;
        this.state.lastResult = result;
        this.state.error = null;
        this.state.staleWorkspace = false;
      })
      .catch((err) => {
        if (seq <= this.appliedSeq) return;
        this.appliedSeq = seq;
        if (err && typeof err === "object" && "status" in err && (err as { status: number }).status === 409) {
          this.state.staleWorkspace = true;
        }
        this.state.error = err instanceof Error ? err.message : String(err);
      })
      .finally(() => {
        if (seq === this.nextSeq) this.state.busy = false;
        this.onChange(this.state);
      });
  }

  /** Number of requests issued so far (for tests and diagnostics). */
  get issued(): number {
    return this.nextSeq;
  }
}
