import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Debouncer, LatestOnly } from "../src/debounce.js";

describe("LatestOnly", () => {
  it("resolves a lone task with its value", async () => {
    const flight = new LatestOnly();
    const value = await flight.run(async () => 7);
    expect(value).toBe(7);
    expect(flight.inFlight).toBe(false);
  });

  it("aborts the in-flight task when a newer one arrives", async () => {
    const flight = new LatestOnly();
    const aborted: boolean[] = [];
    const slow = flight.run(
      (signal) =>
        new Promise<string>((resolve) => {
          signal.addEventListener("abort", () => {
            aborted.push(true);
            resolve("slow");
          });
        }),
    );
    const fast = flight.run(async () => "fast");
    expect(await fast).toBe("fast");
    expect(await slow).toBeNull(); // superseded
    expect(aborted).toEqual([true]);
  });

  it("keeps at most one request in flight", async () => {
    const flight = new LatestOnly();
    let active = 0;
    let peak = 0;
    const tasks = [0, 1, 2, 3].map((i) =>
      flight.run(async (signal) => {
        active += 1;
        peak = Math.max(peak, active);
        await new Promise((resolve) => setTimeout(resolve, 5));
        active -= 1;
        if (signal.aborted) return null;
        return i;
      }),
    );
    const results = await Promise.all(tasks);
    expect(results.slice(0, 3)).toEqual([null, null, null]);
    expect(results[3]).toBe(3);
  });

  it("propagates real failures but swallows aborted ones", async () => {
    const flight = new LatestOnly();
    await expect(
      flight.run(async () => {
        throw new Error("boom");
      }),
    ).rejects.toThrow("boom");
  });
});

describe("Debouncer", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("collapses rapid calls into the last one", () => {
    const debounce = new Debouncer(100);
    const calls: number[] = [];
    debounce.schedule(() => calls.push(1));
    vi.advanceTimersByTime(50);
    debounce.schedule(() => calls.push(2));
    vi.advanceTimersByTime(50);
    debounce.schedule(() => calls.push(3));
    vi.advanceTimersByTime(100);
    expect(calls).toEqual([3]);
  });

  it("cancel drops the pending call", () => {
    const debounce = new Debouncer(40);
    const calls: number[] = [];
    debounce.schedule(() => calls.push(1));
    debounce.cancel();
    vi.advanceTimersByTime(100);
    expect(calls).toEqual([]);
  });
});
