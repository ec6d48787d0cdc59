/** Request scheduling for slider-driven edits: wait for the input to
 * settle, keep at most one request in flight, and abort a stale request
 * the moment a newer position supersedes it. */

export type Task<T> = (signal: AbortSignal) => Promise<T>;

export class LatestOnly {
  private controller: AbortController | null = null;
  private generation = 0;

  /** Runs the task, aborting whichever task was still in flight.
   * Resolves to null when this task was itself superseded. */
  async run<T>(task: Task<T>): Promise<T | null> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const generation = ++this.generation;
    try {
      const value = await task(controller.signal);
      return generation === this.generation ? value : null;
    } catch (error) {
      if (controller.signal.aborted) return null;
      throw error;
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }

  get inFlight(): boolean {
    return this.controller !== null;
  }
}

export class Debouncer {
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(private readonly delayMs: number) {}

  /** Schedules fn after the delay, dropping any previously scheduled call. */
  schedule(fn: () => void): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      fn();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }
}
