/**
 * Typed client for the arena's HTTP API.
 *
 * Configuration keys and vertex keys are opaque lowercase hex digests;
 * the client never computes game facts itself, it only transports them.
 */

export interface ProcessCard {
  pid: number;
  level: number;
  stage: string;
  active: boolean;
  output: number | null;
  input: number;
  vertexKey: string;
}

export interface ConfigPayload {
  configKey: string;
  states: ProcessCard[];
  provenance?: number[];
  status?: string;
}

export interface SessionSummary {
  sessionId: string;
  n: number;
  k: number;
  phase: number;
  alpha: number[];
  status: string;
  winReason: string;
  queries: number;
  level: number;
  finalized: boolean;
  aSet: ConfigPayload[];
  aPrime: ConfigPayload[];
  terminated: Record<string, string[]>;
}

export interface GraphVertex {
  key: string;
  id: number;
  level: number;
  scan: string[];
  input: number | null;
  status: string;
  seen: number[];
}

export interface GraphPayload {
  level: number;
  vertices: GraphVertex[];
  cliques: string[][];
}

export interface CommitSummary {
  phase: number;
  alpha: number[];
  status: string;
  aSet: string[];
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      /* keep statusText */
    }
    throw new ApiError(res.status, detail);
  }
  return (await res.json()) as T;
}

export class ArenaClient {
  constructor(readonly base: string = "") {}

  health(): Promise<{ status: string }> {
    return request(`${this.base}/health`);
  }

  newSession(n: number, k: number): Promise<{ sessionId: string }> {
    return request(`${this.base}/sessions`, {
      method: "POST",
      body: JSON.stringify({ n, k }),
    });
  }

  summary(sid: string): Promise<SessionSummary> {
    return request(`${this.base}/sessions/${sid}`);
  }

  stepQuery(sid: string, configKey: string, process: number): Promise<ConfigPayload> {
    return request(`${this.base}/sessions/${sid}/query`, {
      method: "POST",
      body: JSON.stringify({ configKey, process }),
    });
  }

  outputQuery(
    sid: string,
    configKey: string,
    processes: number[],
    value: number,
  ): Promise<{ schedule: number[] | null }> {
    return request(`${this.base}/sessions/${sid}/output-query`, {
      method: "POST",
      body: JSON.stringify({ configKey, processes, value }),
    });
  }

  commit(sid: string, configKey: string, schedule: number[]): Promise<CommitSummary> {
    return request(`${this.base}/sessions/${sid}/commit`, {
      method: "POST",
      body: JSON.stringify({ configKey, schedule }),
    });
  }

  graph(sid: string, level: number): Promise<GraphPayload> {
    return request(`${this.base}/sessions/${sid}/graph?level=${level}`);
  }

  async transcript(sid: string): Promise<string> {
    const res = await fetch(`${this.base}/sessions/${sid}/transcript`);
    if (!res.ok) throw new ApiError(res.status, res.statusText);
    return await res.text();
  }
}
