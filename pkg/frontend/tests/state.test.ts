import { describe, expect, it } from "vitest";

import type { Catalog, EditResponse } from "../src/api.js";
import {
  applyToTimeline,
  buildEditBody,
  clampDelta,
  exportTimeline,
  importTimeline,
  initialState,
  selectReference,
  selectSource,
  setDelta,
  toggleAttribute,
  undoTimeline,
} from "../src/state.js";

const catalog: Catalog = {
  api_version: 1,
  checkpoint_id: "abc",
  attributes: [
    { name: "warmth", region: "sky", groups: [{ phrases: ["a", "b"], template: "{}" }] },
    { name: "glow", region: "band", groups: [{ phrases: ["c", "d"], template: "{}" }] },
  ],
  delta: { min: 0, max: 3, default: 1 },
};

function editResponse(id: string, attributes: string[], delta: number): EditResponse {
  return {
    api_version: 1,
    image_id: id,
    image_url: `/images/${id}`,
    content_address: `${id}-address`,
    delta,
    attributes,
    report: [],
  };
}

describe("studio state", () => {
  it("starts at the catalog default intensity with nothing selected", () => {
    const state = initialState(catalog);
    expect(state.delta).toBe(1);
    expect(state.sourceId).toBeNull();
    expect(buildEditBody(state)).toBeNull();
  });

  it("clamps intensity to catalog bounds", () => {
    const state = initialState(catalog);
    expect(setDelta(state, catalog, 99).delta).toBe(3);
    expect(setDelta(state, catalog, -1).delta).toBe(0);
    expect(setDelta(state, catalog, Number.NaN).delta).toBe(1);
    expect(clampDelta(catalog, 2.2)).toBe(2.2);
  });

  it("toggles known attributes and rejects unknown ones", () => {
    let state = initialState(catalog);
    state = toggleAttribute(state, catalog, "warmth");
    expect(state.checked).toEqual(["warmth"]);
    state = toggleAttribute(state, catalog, "glow");
    expect(state.checked).toEqual(["warmth", "glow"]);
    state = toggleAttribute(state, catalog, "warmth");
    expect(state.checked).toEqual(["glow"]);
    expect(() => toggleAttribute(state, catalog, "beard")).toThrow(/unknown/);
  });

  it("builds an edit body only when a full pair plus targets is selected", () => {
    let state = initialState(catalog);
    state = selectSource(state, "src1");
    expect(buildEditBody(state)).toBeNull();
    state = selectReference(state, "ref1");
    expect(buildEditBody(state)).toBeNull();
    state = toggleAttribute(state, catalog, "glow");
    expect(buildEditBody(state)).toEqual({
      source_id: "src1",
      reference_id: "ref1",
      attributes: ["glow"],
      delta: 1,
    });
  });

  it("apply rebases the working source and undo restores it", () => {
    let state = initialState(catalog);
    state = selectSource(state, "src1");
    state = selectReference(state, "ref1");
    state = toggleAttribute(state, catalog, "warmth");
    state = applyToTimeline(state, editResponse("edit1", ["warmth"], 1));
    expect(state.timeline).toHaveLength(1);
    expect(state.sourceId).toBe("edit1");
    expect(state.checked).toEqual([]);

    state = toggleAttribute(state, catalog, "glow");
    state = applyToTimeline(state, editResponse("edit2", ["glow"], 1.5));
    expect(state.sourceId).toBe("edit2");
    expect(state.timeline.map((s) => s.resultId)).toEqual(["edit1", "edit2"]);

    state = undoTimeline(state);
    expect(state.sourceId).toBe("edit1");
    expect(state.timeline).toHaveLength(1);
    state = undoTimeline(state);
    expect(state.sourceId).toBe("src1");
    expect(undoTimeline(state).sourceId).toBe("src1"); // no-op on empty
  });

  it("timeline export JSON reimports to identical state", () => {
    let state = initialState(catalog);
    state = selectSource(state, "src1");
    state = selectReference(state, "ref1");
    state = toggleAttribute(state, catalog, "warmth");
    state = applyToTimeline(state, editResponse("edit1", ["warmth"], 1));
    state = setDelta(state, catalog, 2.2);
    state = toggleAttribute(state, catalog, "glow");

    const exported = exportTimeline(state);
    const restored = importTimeline(exported, catalog);
    expect(restored).toEqual(state);
    // and the round trip is stable
    expect(exportTimeline(restored)).toBe(exported);
  });

  it("import validates attributes and version", () => {
    const bad = JSON.stringify({
      version: 1,
      sourceId: null,
      referenceId: null,
      checked: ["beard"],
      delta: 1,
      timeline: [],
    });
    expect(() => importTimeline(bad, catalog)).toThrow(/unknown attribute/);
    const futuristic = JSON.stringify({ version: 2, checked: [], timeline: [] });
    expect(() => importTimeline(futuristic, catalog)).toThrow(/version/);
  });
});
