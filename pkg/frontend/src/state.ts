/** Studio state and its pure transitions.
 *
 * The state never holds pixels, only ids: every image the UI shows is
 * fetched from the service by content address. Transitions return new
 * objects so the app can treat state as immutable.
 */

import type { Catalog, EditBody, EditResponse } from "./api.js";

export interface TimelineStep {
  attributes: string[];
  delta: number;
  resultId: string;
  contentAddress: string;
  /** Working source before this step, for undo. */
  previousSourceId: string;
}

export interface StudioState {
  sourceId: string | null;
  referenceId: string | null;
  checked: string[];
  delta: number;
  timeline: TimelineStep[];
}

export function initialState(catalog: Catalog): StudioState {
  return {
    sourceId: null,
    referenceId: null,
    checked: [],
    delta: clampDelta(catalog, catalog.delta.default),
    timeline: [],
  };
}

export function clampDelta(catalog: Catalog, value: number): number {
  if (!Number.isFinite(value)) return catalog.delta.default;
  return Math.min(catalog.delta.max, Math.max(catalog.delta.min, value));
}

export function selectSource(state: StudioState, id: string): StudioState {
  return { ...state, sourceId: id };
}

export function selectReference(state: StudioState, id: string): StudioState {
  return { ...state, referenceId: id };
}

export function setDelta(state: StudioState, catalog: Catalog, value: number): StudioState {
  return { ...state, delta: clampDelta(catalog, value) };
}

export function toggleAttribute(
  state: StudioState,
  catalog: Catalog,
  name: string,
): StudioState {
  const known = catalog.attributes.some((a) => a.name === name);
  if (!known) throw new Error(`unknown attribute ${name}`);
  const checked = state.checked.includes(name)
    ? state.checked.filter((n) => n !== name)
    : [...state.checked, name];
  return { ...state, checked };
}

/** The one place an edit request is assembled from state. */
export function buildEditBody(state: StudioState): EditBody | null {
  if (!state.sourceId || !state.referenceId || state.checked.length === 0) return null;
  return {
    source_id: state.sourceId,
    reference_id: state.referenceId,
    attributes: [...state.checked],
    delta: state.delta,
  };
}

/** Commit the displayed result: it becomes the new working source. */
export function applyToTimeline(state: StudioState, result: EditResponse): StudioState {
  if (!state.sourceId) throw new Error("no working source to apply against");
  const step: TimelineStep = {
    attributes: [...result.attributes],
    delta: result.delta,
    resultId: result.image_id,
    contentAddress: result.content_address,
    previousSourceId: state.sourceId,
  };
  return {
    ...state,
    sourceId: result.image_id,
    checked: [],
    timeline: [...state.timeline, step],
  };
}

export function undoTimeline(state: StudioState): StudioState {
  const last = state.timeline[state.timeline.length - 1];
  if (!last) return state;
  return {
    ...state,
    sourceId: last.previousSourceId,
    timeline: state.timeline.slice(0, -1),
  };
}

interface TimelineExport {
  version: 1;
  sourceId: string | null;
  referenceId: string | null;
  checked: string[];
  delta: number;
  timeline: TimelineStep[];
}

export function exportTimeline(state: StudioState): string {
  const payload: TimelineExport = {
    version: 1,
    sourceId: state.sourceId,
    referenceId: state.referenceId,
    checked: [...state.checked],
    delta: state.delta,
    timeline: state.timeline.map((s) => ({ ...s, attributes: [...s.attributes] })),
  };
  return JSON.stringify(payload, null, 2);
}

export function importTimeline(text: string, catalog: Catalog): StudioState {
  const raw = JSON.parse(text) as TimelineExport;
  if (raw.version !== 1) throw new Error(`unsupported timeline version ${raw.version}`);
  const names = new Set(catalog.attributes.map((a) => a.name));
  for (const name of raw.checked) {
    if (!names.has(name)) throw new Error(`unknown attribute ${name}`);
  }
  for (const step of raw.timeline) {
    for (const name of step.attributes) {
      if (!names.has(name)) throw new Error(`unknown attribute ${name}`);
    }
  }
  return {
    sourceId: raw.sourceId,
    referenceId: raw.referenceId,
    checked: [...raw.checked],
    delta: clampDelta(catalog, raw.delta),
    timeline: raw.timeline.map((s) => ({ ...s, attributes: [...s.attributes] })),
  };
}
