/** QMM report rendering: one bar per attribute. Targeted attributes show
 * distance to the reference, the rest distance to the source. */

import type { ReportRow } from "./api.js";

export interface BarSpec {
  name: string;
  label: string;
  /** Bar fill as a fraction of the track, in [0, 1]. */
  fraction: number;
  targeted: boolean;
  distance: number;
}

/** Scale distances against the largest bar so small values stay visible. */
export function barSpecs(report: ReportRow[]): BarSpec[] {
  const peak = Math.max(0.25, ...report.map((r) => r.distance));
  return report.map((r) => ({
    name: r.name,
    label: r.targeted ? `${r.name} → reference` : `${r.name} → source`,
    fraction: Math.min(1, r.distance / peak),
    targeted: r.targeted,
    distance: r.distance,
  }));
}

export function renderBars(container: HTMLElement, report: ReportRow[]): void {
  container.replaceChildren();
  for (const spec of barSpecs(report)) {
    const row = document.createElement("div");
    row.className = "bar-row";

    const label = document.createElement("span");
    label.className = "bar-label";
    label.textContent = spec.label;

    const track = document.createElement("div");
    track.className = "bar-track";
    const fill = document.createElement("div");
    fill.className = spec.targeted ? "bar-fill targeted" : "bar-fill preserved";
    fill.style.width = `${(spec.fraction * 100).toFixed(1)}%`;
    track.appendChild(fill);

    const value = document.createElement("span");
    value.className = "bar-value";
    value.textContent = spec.distance.toFixed(4);

    row.append(label, track, value);
    container.appendChild(row);
  }
}
