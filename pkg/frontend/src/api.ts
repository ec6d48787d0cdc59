/** Typed client for the editing service JSON API (version 1). */

export interface DeltaBounds {
  min: number;
  max: number;
  default: number;
}

export interface CatalogGroup {
  phrases: string[];
  template: string;
}

export interface CatalogAttribute {
  name: string;
  region: string;
  groups: CatalogGroup[];
}

export interface Catalog {
  api_version: number;
  checkpoint_id: string;
  attributes: CatalogAttribute[];
  delta: DeltaBounds;
}

export interface GalleryEntry {
  id: string;
  seed: number;
  index: number;
  pose: number;
  image_url: string;
}

export interface EditBody {
  source_id: string;
  reference_id: string;
  attributes: string[];
  delta: number;
}

export interface ReportRow {
  name: string;
  targeted: boolean;
  distance: number;
}

export interface EditResponse {
  api_version: number;
  image_id: string;
  image_url: string;
  content_address: string;
  delta: number;
  attributes: string[];
  report: ReportRow[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(`API ${status}: ${detail}`);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const payload = (await response.json()) as { detail?: string };
      if (payload.detail) detail = payload.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  async attributes(signal?: AbortSignal): Promise<Catalog> {
    return parseOrThrow(await fetch(`${this.base}/attributes`, { signal }));
  }

  async sample(count: number, seed: number, signal?: AbortSignal): Promise<GalleryEntry[]> {
    const response = await fetch(`${this.base}/sample`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ count, seed }),
      signal,
    });
    const payload = await parseOrThrow<{ entries: GalleryEntry[] }>(response);
    return payload.entries;
  }

  async edit(body: EditBody, signal?: AbortSignal): Promise<EditResponse> {
    const response = await fetch(`${this.base}/edit`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    return parseOrThrow<EditResponse>(response);
  }

  /** Every displayed image is fetched by content address from the service. */
  imageUrl(idOrUrl: string): string {
    if (idOrUrl.startsWith("/")) return `${this.base}${idOrUrl}`;
    return `${this.base}/images/${idOrUrl}`;
  }
}
