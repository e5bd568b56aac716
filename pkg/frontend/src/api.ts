/**
 * Typed client for the exploration service HTTP API.  Every user action in
 * the dashboard maps to exactly one of these calls; the service is the
 * single source of truth and the client holds no authoritative state.
 */

export type SessionState = "idle" | "running" | "paused" | "done";

/** Closed intervals per constraint feature, e.g. { volume: [0.6, 0.7] }. */
export type RoiIntervals = Record<string, [number, number]>;

export interface ExplorerConfigBody {
  method?: string;
  budget?: number;
  n_init?: number;
  balance_prob?: number;
  subspace_dims?: number;
  seed?: number;
}

export interface CreateSessionBody {
  system: string;
  config?: ExplorerConfigBody;
  roi?: RoiIntervals;
  rollout_steps?: number;
}

export interface SessionSnapshot {
  id: string;
  system: string;
  state: SessionState;
  config: Record<string, unknown>;
  roi: RoiIntervals;
  history_length: number;
  inlier_count: number;
  metrics: {
    global_diversity: number;
    constrained_diversity: number;
    acceptance_rate: number;
  };
}

export interface RoiCensus {
  inlier_count: number;
  total: number;
}

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(`service responded ${status}: ${detail}`);
  }
}

export class ServiceClient {
  constructor(
    private base: string,
    private fetchFn: typeof fetch = globalThis.fetch,
  ) {
    this.base = base.replace(/\/+$/, "");
  }

  async createSession(body: CreateSessionBody): Promise<{ id: string; state: SessionState }> {
    return this.request("POST", "/sessions", body);
  }

  async getSession(id: string): Promise<SessionSnapshot> {
    return this.request("GET", `/sessions/${id}`);
  }

  async control(id: string, action: "run" | "pause"): Promise<{ state: SessionState }>;
  async control(id: string, action: "step", n: number): Promise<{ state: SessionState }>;
  async control(id: string, action: string, n?: number): Promise<{ state: SessionState }> {
    const body: Record<string, unknown> = { action };
    if (n !== undefined) body.n = n;
    return this.request("POST", `/sessions/${id}/control`, body);
  }

  async putRoi(id: string, roi: RoiIntervals): Promise<RoiCensus> {
    return this.request("PUT", `/sessions/${id}/roi`, roi);
  }

  eventsUrl(id: string, since = 0): string {
    return `${this.base}/sessions/${id}/events?since=${since}`;
  }

  patternUrl(id: string, index: number): string {
    return `${this.base}/sessions/${id}/patterns/${index}.png`;
  }

  metricsCsvUrl(id: string): string {
    return `${this.base}/sessions/${id}/metrics.csv`;
  }

  historyUrl(id: string): string {
    return `${this.base}/sessions/${id}/history.jsonl`;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.base}${path}`, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const parsed = (await resp.json()) as { detail?: unknown };
        if (parsed.detail !== undefined) detail = JSON.stringify(parsed.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }
}
