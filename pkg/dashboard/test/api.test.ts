import { describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function stub(responses: Record<string, () => Response>): { client: Client; calls: Call[] } {
  const calls: Call[] = [];
  const client = new Client("", (url, init) => {
    calls.push({ url, init });
    const path = url.split("?")[0] as string;
    const make = responses[path];
    if (!make) return Promise.resolve(new Response("not found", { status: 404 }));
    return Promise.resolve(make());
  });
  return { client, calls };
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("status", () => {
  it("parses the snapshot", async () => {
    const { client } = stub({
      "/status": () => json({ state: "running", step: 4, mixing: { aa: 1 } }),
    });
    const snap = await client.status();
    expect(snap.state).toBe("running");
    expect(snap.step).toBe(4);
  });

  it("propagates transport failures", async () => {
    const client = new Client("", () => Promise.reject(new TypeError("fetch failed")));
    await expect(client.status()).rejects.toThrow("fetch failed");
  });
});

describe("historySince", () => {
  it("requests from the given step and parses line-delimited rows", async () => {
    const body =
      JSON.stringify({ step: 8, loss: 2, lr: 1e-4, tokens: 9, per_language_loss: { aa: 2 } }) +
      "\n" +
      JSON.stringify({ step: 9, loss: 1.9, lr: 1e-4, tokens: 9, per_language_loss: { aa: 1.9 } }) +
      "\n";
    const { client, calls } = stub({
      "/metrics/history": () => new Response(body, { status: 200 }),
    });
    const rows = await client.historySince(7);
    expect(calls[0]?.url).toBe("/metrics/history?since=7");
    expect(rows.map((r) => r.step)).toEqual([8, 9]);
  });

  it("returns no rows for an empty body", async () => {
    const { client } = stub({
      "/metrics/history": () => new Response("", { status: 200 }),
    });
    expect(await client.historySince(0)).toEqual([]);
  });
});

describe("submitMixing", () => {
  it("posts the weights as JSON and parses the acknowledgement", async () => {
    const { client, calls } = stub({
      "/mixing": () => json({ effective_step: 12, weights: { aa: 0.4, bb: 0.6 } }),
    });
    const ack = await client.submitMixing({ aa: 0.4, bb: 0.6 });
    expect(ack.effective_step).toBe(12);
    const init = calls[0]?.init;
    expect(init?.method).toBe("POST");
    expect(JSON.parse(init?.body as string)).toEqual({ weights: { aa: 0.4, bb: 0.6 } });
  });

  it("surfaces the backend's rejection reason", async () => {
    const { client } = stub({
      "/mixing": () => json({ detail: "unknown language code: zz" }, 400),
    });
    const err = await client.submitMixing({ zz: 1 }).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(400);
    expect((err as ApiError).message).toBe("unknown language code: zz");
  });

  it("falls back to the status line when the error body is not JSON", async () => {
    const { client } = stub({
      "/mixing": () => new Response("boom", { status: 500, statusText: "Internal Server Error" }),
    });
    const err = await client.submitMixing({ aa: 1 }).catch((e: unknown) => e);
    expect((err as ApiError).message).toBe("500 Internal Server Error");
  });
});

describe("lifecycle", () => {
  it("hits pause, resume, and checkpoint", async () => {
    const { client, calls } = stub({
      "/pause": () => json({ state: "paused", step: 3 }),
      "/resume": () => json({ state: "running", step: 3 }),
      "/checkpoint": () => json({ path: "ck/step-000003.ckpt", step: 3 }),
    });
    expect((await client.pause()).state).toBe("paused");
    expect((await client.resume()).state).toBe("running");
    expect((await client.checkpoint()).path).toMatch(/step-000003/);
    expect(calls.map((c) => c.url)).toEqual(["/pause", "/resume", "/checkpoint"]);
    expect(calls.every((c) => c.init?.method === "POST")).toBe(true);
  });
});
