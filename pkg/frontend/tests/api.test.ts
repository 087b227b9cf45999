import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function client(impl: (input: string, init?: RequestInit) => Promise<Response>) {
  const fetchFn = vi.fn(impl);
  return { api: new ApiClient("", fetchFn), fetchFn };
}

describe("ApiClient", () => {
  it("fetches state from /api/state", async () => {
    const { api, fetchFn } = client(async () => jsonResponse({ stages: {}, config: {} }));
    const state = await api.state();
    expect(state.stages).toEqual({});
    expect(fetchFn).toHaveBeenCalledWith("/api/state", undefined);
  });

  it("encodes document ids", async () => {
    const { api, fetchFn } = client(async () =>
      jsonResponse({ id: "a b", group: "g", word_count: 1, text: "x" }),
    );
    await api.document("a b");
    expect(fetchFn).toHaveBeenCalledWith("/api/documents/a%20b", undefined);
  });

  it("posts merge rejection with no body", async () => {
    const { api, fetchFn } = client(async () =>
      jsonResponse({ unique_codes: 53, stale: ["themes"], trail_index: 9 }),
    );
    const result = await api.rejectMerge(17);
    expect(result.unique_codes).toBe(53);
    const [url, init] = fetchFn.mock.calls[0];
    expect(url).toBe("/api/review/merges/17/reject");
    expect(init?.method).toBe("POST");
  });

  it("posts theme edits as JSON", async () => {
    const { api, fetchFn } = client(async () => jsonResponse({ stale: [], trail_index: 1 }));
    await api.editTheme("T2", { name: "Renamed" });
    const [url, init] = fetchFn.mock.calls[0];
    expect(url).toBe("/api/review/themes/T2");
    expect(JSON.parse(init!.body as string)).toEqual({ name: "Renamed" });
  });

  it("normalizes move payloads", async () => {
    const { api, fetchFn } = client(async () => jsonResponse({ stale: [], trail_index: 1 }));
    await api.moveCodes("T1", { add: [3] });
    const [, init] = fetchFn.mock.calls[0];
    expect(JSON.parse(init!.body as string)).toEqual({ add: [3], remove: [] });
  });

  it("posts hierarchy promotion", async () => {
    const { api, fetchFn } = client(async () => jsonResponse({ stale: [], trail_index: 2 }));
    await api.promoteSubtheme(10);
    const [url, init] = fetchFn.mock.calls[0];
    expect(url).toBe("/api/review/hierarchy/promote");
    expect(JSON.parse(init!.body as string)).toEqual({ subtheme_index: 10 });
  });

  it("surfaces server error details", async () => {
    const { api } = client(async () => jsonResponse({ detail: "stage 'ingest' not done" }, 409));
    await expect(api.rerunStage("dedup")).rejects.toThrowError(ApiError);
    await expect(api.rerunStage("dedup")).rejects.toThrow(/stage 'ingest' not done/);
  });

  it("handles non-JSON error bodies", async () => {
    const { api } = client(async () => new Response("boom", { status: 500 }));
    await expect(api.state()).rejects.toThrow(/HTTP 500/);
  });
});
