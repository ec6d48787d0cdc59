import { describe, expect, it } from "vitest";

import { barSpecs } from "../src/bars.js";

describe("report bars", () => {
  it("labels targeted rows against the reference and the rest against the source", () => {
    const specs = barSpecs([
      { name: "warmth", targeted: true, distance: 0.5 },
      { name: "glow", targeted: false, distance: 0.1 },
    ]);
    expect(specs[0]?.label).toBe("warmth → reference");
    expect(specs[1]?.label).toBe("glow → source");
  });

  it("scales fractions against the largest distance", () => {
    const specs = barSpecs([
      { name: "a", targeted: true, distance: 2.0 },
      { name: "b", targeted: false, distance: 0.5 },
    ]);
    expect(specs[0]?.fraction).toBe(1);
    expect(specs[1]?.fraction).toBeCloseTo(0.25);
  });

  it("keeps tiny distances visible against the floor scale", () => {
    const specs = barSpecs([{ name: "a", targeted: false, distance: 0.01 }]);
    expect(specs[0]?.fraction).toBeCloseTo(0.04);
    expect(specs[0]?.fraction).toBeLessThan(1);
  });
});
