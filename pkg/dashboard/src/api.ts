/** Thin fetch client over the six control-surface endpoints. */

import type {
  CheckpointAck,
  HistoryRow,
  LifecycleAck,
  MixingAck,
  StatusSnapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

// Polls time out quickly so a dead backend is reported as disconnected
// instead of hanging; mutations are left unbounded because a checkpoint
// write can legitimately take a while.
const POLL_TIMEOUT_MS = 5000;

export class Client {
  constructor(
    private readonly base = "",
    private readonly fetcher: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get(path: string): Promise<Response> {
    const res = await this.fetcher(this.base + path, {
      signal: AbortSignal.timeout(POLL_TIMEOUT_MS),
    });
    if (!res.ok) throw new ApiError(await errorDetail(res), res.status);
    return res;
  }

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method: "POST" };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetcher(this.base + path, init);
    if (!res.ok) throw new ApiError(await errorDetail(res), res.status);
    return (await res.json()) as T;
  }

  async status(): Promise<StatusSnapshot> {
    const res = await this.get("/status");
    return (await res.json()) as StatusSnapshot;
  }

  async historySince(step: number): Promise<HistoryRow[]> {
    const res = await this.get(`/metrics/history?since=${step}`);
    const text = await res.text();
    return text
      .split("\n")
      .filter((line) => line.trim() !== "")
      .map((line) => JSON.parse(line) as HistoryRow);
  }

  submitMixing(weights: Record<string, number>): Promise<MixingAck> {
    return this.post("/mixing", { weights });
  }

  pause(): Promise<LifecycleAck> {
    return this.post("/pause");
  }

  resume(): Promise<LifecycleAck> {
    return this.post("/resume");
  }

  checkpoint(): Promise<CheckpointAck> {
    return this.post("/checkpoint");
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // not a JSON error body
  }
  return `${res.status} ${res.statusText}`;
}
