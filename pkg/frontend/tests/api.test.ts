/**
 * AnnotationApi unit tests with an injected fetch: request shape (auth
 * header, JSON bodies, URL building) and error normalization.
 */

import { describe, expect, it } from "vitest";

import { AnnotationApi, ApiError } from "../src/api.js";

interface Recorded {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: string | undefined;
}

function fakeFetch(status: number, payload: unknown) {
  const calls: Recorded[] = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    calls.push({
      url: String(input),
      method: init?.method ?? "GET",
      headers: (init?.headers ?? {}) as Record<string, string>,
      body: init?.body as string | undefined,
    });
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
  return { fetchFn, calls };
}

function client(fetchFn: typeof fetch, baseUrl = "http://svc:8100/") {
  return new AnnotationApi({ baseUrl, token: "tok-123", fetchFn });
}

describe("request shape", () => {
  it("sends the bearer token on every call and trims the base URL", async () => {
    const { fetchFn, calls } = fakeFetch(200, []);
    await client(fetchFn).listCandidates();
    expect(calls[0]?.url).toBe("http://svc:8100/candidates");
    expect(calls[0]?.headers.Authorization).toBe("Bearer tok-123");
    expect(calls[0]?.body).toBeUndefined();
  });

  it("posts JSON bodies with the content type set", async () => {
    const { fetchFn, calls } = fakeFetch(201, {});
    await client(fetchFn).createSession("agent-a", "expert-1");
    expect(calls[0]?.method).toBe("POST");
    expect(calls[0]?.headers["Content-Type"]).toBe("application/json");
    expect(JSON.parse(calls[0]?.body ?? "")).toEqual({
      agent_id: "agent-a",
      annotator: "expert-1",
    });
  });

  it("encodes session ids into paths", async () => {
    const { fetchFn, calls } = fakeFetch(200, {});
    await client(fetchFn).postTurn("s 1/odd", "hi");
    expect(calls[0]?.url).toBe("http://svc:8100/sessions/s%201%2Fodd/turns");
  });

  it("maps the rating form onto the wire fields", async () => {
    const { fetchFn, calls } = fakeFetch(200, {});
    await client(fetchFn).submitRating("s-1", {
      conformity: 87,
      justification: "held character",
      item_agreement: { age: 5 },
    });
    expect(JSON.parse(calls[0]?.body ?? "")).toEqual({
      conformity: 87,
      justification: "held character",
      item_agreement: { age: 5 },
    });
  });
});

describe("error normalization", () => {
  it("carries the server's detail verbatim with the status", async () => {
    const { fetchFn } = fakeFetch(403, { detail: "rating requires at least 15 expert turns" });
    const err = await client(fetchFn).exportRatings().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(403);
    expect((err as ApiError).detail).toBe("rating requires at least 15 expert turns");
  });

  it("flags 401 as an auth failure", async () => {
    const { fetchFn } = fakeFetch(401, { detail: "missing or invalid bearer token" });
    const err = await client(fetchFn).listCandidates().catch((e: unknown) => e);
    expect((err as ApiError).isAuthFailure).toBe(true);
  });

  it("keeps non-JSON error bodies as raw text", async () => {
    const fetchFn = (async () => new Response("bad gateway", { status: 502 })) as typeof fetch;
    const err = await client(fetchFn).listCandidates().catch((e: unknown) => e);
    expect((err as ApiError).detail).toBe("bad gateway");
  });

  it("turns transport failures into status 0 network errors", async () => {
    const fetchFn = (async () => {
      throw new TypeError("fetch failed");
    }) as typeof fetch;
    const err = await client(fetchFn).listCandidates().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(0);
    expect((err as ApiError).isNetworkFailure).toBe(true);
    expect((err as ApiError).message).toContain("fetch failed");
  });
});
