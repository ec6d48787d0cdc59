/** Studio wiring: gallery picking, attribute toggles, the intensity
 * slider, sequential timeline, and the report panel.
 *
 * All pixels come from the service by content address; this module only
 * moves ids and numbers around.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Catalog, EditResponse, GalleryEntry } from "./api.js";
import { Debouncer, LatestOnly } from "./debounce.js";
import { renderBars } from "./bars.js";
import {
  applyToTimeline,
  buildEditBody,
  exportTimeline,
  importTimeline,
  initialState,
  selectReference,
  selectSource,
  setDelta,
  toggleAttribute,
  undoTimeline,
} from "./state.js";
import type { StudioState } from "./state.js";

const SLIDER_STEP = 0.05;
const USEFUL_BAND: [number, number] = [1.0, 2.25];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export class StudioApp {
  private state!: StudioState;
  private catalog!: Catalog;
  private lastResult: EditResponse | null = null;
  private readonly api: ApiClient;
  private readonly editFlight = new LatestOnly();
  private readonly sliderDebounce = new Debouncer(120);

  constructor(base: string = "") {
    this.api = new ApiClient(base);
  }

  async boot(): Promise<void> {
    this.catalog = await this.api.attributes();
    this.state = initialState(this.catalog);
    this.renderAttributeToggles();
    this.renderSlider();
    this.wireControls();
    await this.loadGallery(Number((el<HTMLInputElement>("gallery-seed")).value) || 0);
    this.renderAll();
  }

  // ----- rendering -------------------------------------------------------

  private renderAttributeToggles(): void {
    const host = el<HTMLDivElement>("attribute-toggles");
    host.replaceChildren();
    for (const attribute of this.catalog.attributes) {
      const label = document.createElement("label");
      label.className = "toggle";
      const box = document.createElement("input");
      box.type = "checkbox";
      box.dataset.attribute = attribute.name;
      box.addEventListener("change", () => {
        this.state = toggleAttribute(this.state, this.catalog, attribute.name);
        this.scheduleEdit();
      });
      label.append(box, document.createTextNode(attribute.name));
      label.title = attribute.groups
        .map((g) => g.phrases.map((p) => g.template.replace("{}", p)).join(" / "))
        .join("\n");
      host.appendChild(label);
    }
  }

  private renderSlider(): void {
    const slider = el<HTMLInputElement>("delta-slider");
    slider.min = String(this.catalog.delta.min);
    slider.max = String(this.catalog.delta.max);
    slider.step = String(SLIDER_STEP);
    slider.value = String(this.state.delta);
    const ticks = el<HTMLDataListElement>("delta-ticks");
    ticks.replaceChildren();
    for (const tick of USEFUL_BAND) {
      const option = document.createElement("option");
      option.value = String(tick);
      ticks.appendChild(option);
    }
  }

  private renderAll(): void {
    el<HTMLSpanElement>("delta-value").textContent = this.state.delta.toFixed(2);
    this.renderPane("source-pane", this.state.sourceId);
    this.renderPane("reference-pane", this.state.referenceId);
    this.renderTimeline();
    const checkboxes = el<HTMLDivElement>("attribute-toggles").querySelectorAll("input");
    checkboxes.forEach((box) => {
      box.checked = this.state.checked.includes(box.dataset.attribute ?? "");
    });
  }

  private renderPane(paneId: string, imageId: string | null): void {
    const pane = el<HTMLDivElement>(paneId);
    pane.replaceChildren();
    if (!imageId) {
      const hint = document.createElement("p");
      hint.className = "hint";
      hint.textContent = "pick from the gallery";
      pane.appendChild(hint);
      return;
    }
    const img = document.createElement("img");
    img.src = this.api.imageUrl(imageId);
    img.alt = imageId;
    pane.appendChild(img);
  }

  private renderEdited(result: EditResponse | null): void {
    this.lastResult = result;
    const pane = el<HTMLDivElement>("edited-pane");
    pane.replaceChildren();
    el<HTMLButtonElement>("apply-button").disabled = result === null;
    if (!result) {
      const hint = document.createElement("p");
      hint.className = "hint";
      hint.textContent = "check an attribute to edit";
      pane.appendChild(hint);
      renderBars(el<HTMLDivElement>("report-bars"), []);
      return;
    }
    const img = document.createElement("img");
    img.src = this.api.imageUrl(result.image_url);
    img.alt = result.content_address;
    pane.appendChild(img);
    renderBars(el<HTMLDivElement>("report-bars"), result.report);
  }

  private renderTimeline(): void {
    const host = el<HTMLOListElement>("timeline-list");
    host.replaceChildren();
    for (const step of this.state.timeline) {
      const item = document.createElement("li");
      item.textContent = `${step.attributes.join("+")} @ ${step.delta.toFixed(2)} → ${step.resultId}`;
      host.appendChild(item);
    }
    el<HTMLButtonElement>("undo-button").disabled = this.state.timeline.length === 0;
  }

  private showError(message: string): void {
    const banner = el<HTMLDivElement>("error-banner");
    banner.textContent = message;
    banner.classList.remove("hidden");
  }

  private clearError(): void {
    el<HTMLDivElement>("error-banner").classList.add("hidden");
  }

  // ----- actions ----------------------------------------------------------

  private wireControls(): void {
    el<HTMLInputElement>("delta-slider").addEventListener("input", (event) => {
      const value = Number((event.target as HTMLInputElement).value);
      this.state = setDelta(this.state, this.catalog, value);
      el<HTMLSpanElement>("delta-value").textContent = this.state.delta.toFixed(2);
      this.sliderDebounce.schedule(() => void this.issueEdit());
    });
    el<HTMLButtonElement>("gallery-reload").addEventListener("click", () => {
      const seed = Number(el<HTMLInputElement>("gallery-seed").value) || 0;
      void this.loadGallery(seed);
    });
    el<HTMLButtonElement>("apply-button").addEventListener("click", () => {
      if (!this.lastResult) return;
      this.state = applyToTimeline(this.state, this.lastResult);
      this.renderAll();
      this.renderEdited(null);
    });
    el<HTMLButtonElement>("undo-button").addEventListener("click", () => {
      this.state = undoTimeline(this.state);
      this.renderAll();
      this.scheduleEdit();
    });
    el<HTMLButtonElement>("export-button").addEventListener("click", () => {
      el<HTMLTextAreaElement>("timeline-io").value = exportTimeline(this.state);
    });
    el<HTMLButtonElement>("import-button").addEventListener("click", () => {
      try {
        this.state = importTimeline(
          el<HTMLTextAreaElement>("timeline-io").value, this.catalog,
        );
        this.clearError();
        this.renderAll();
        this.scheduleEdit();
      } catch (error) {
        this.showError(`timeline import failed: ${String(error)}`);
      }
    });
  }

  private async loadGallery(seed: number): Promise<void> {
    try {
      const entries = await this.api.sample(12, seed);
      this.renderGallery(entries);
      this.clearError();
    } catch (error) {
      this.showError(this.describe(error));
    }
  }

  private renderGallery(entries: GalleryEntry[]): void {
    const host = el<HTMLDivElement>("gallery");
    host.replaceChildren();
    for (const entry of entries) {
      const card = document.createElement("div");
      card.className = "card";
      const img = document.createElement("img");
      img.src = this.api.imageUrl(entry.image_url);
      img.alt = entry.id;
      const row = document.createElement("div");
      row.className = "card-actions";
      const asSource = document.createElement("button");
      asSource.textContent = "source";
      asSource.addEventListener("click", () => {
        this.state = selectSource(this.state, entry.id);
        this.renderAll();
        this.scheduleEdit();
      });
      const asReference = document.createElement("button");
      asReference.textContent = "reference";
      asReference.addEventListener("click", () => {
        this.state = selectReference(this.state, entry.id);
        this.renderAll();
        this.scheduleEdit();
      });
      row.append(asSource, asReference);
      card.append(img, row);
      host.appendChild(card);
    }
  }

  /** One edit request per settled control change; stale requests abort. */
  private scheduleEdit(): void {
    this.sliderDebounce.cancel();
    void this.issueEdit();
  }

  private async issueEdit(): Promise<void> {
    const body = buildEditBody(this.state);
    if (!body) {
      this.renderEdited(null);
      return;
    }
    try {
      const result = await this.editFlight.run((signal) => this.api.edit(body, signal));
      if (result !== null) {
        this.clearError();
        this.renderEdited(result);
      }
    } catch (error) {
      this.showError(this.describe(error));
    }
  }

  private describe(error: unknown): string {
    if (error instanceof ApiError) return error.message;
    return `service unreachable: ${String(error)}`;
  }
}

if (typeof document !== "undefined" && document.getElementById("gallery")) {
  const app = new StudioApp("");
  window.addEventListener("load", () => void app.boot());
}
