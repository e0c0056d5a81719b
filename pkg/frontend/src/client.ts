/** Thin client over the gateway's JSON routes and event stream. */

import type {
  CommandResponse,
  EventRecord,
  MetricsDoc,
  PreviewDoc,
} from "./types.js";

export class GatewayRejection extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      detail = String(((await resp.json()) as { detail?: string }).detail ?? detail);
    } catch {
      /* non-JSON error body */
    }
    throw new GatewayRejection(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export interface SubscribeOptions {
  /** Polling interval when WebSocket is unavailable (ms). */
  pollMs?: number;
}

export class GatewayClient {
  constructor(readonly baseUrl: string) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
    return asJson<T>(resp);
  }

  private async get<T>(path: string): Promise<T> {
    return asJson<T>(await fetch(`${this.baseUrl}${path}`));
  }

  createSession(body: { scenario?: string; config?: Record<string, unknown> }) {
    return this.post<{ session_id: string; config: Record<string, unknown> }>(
      "/sessions", body);
  }

  utterance(id: string, text: string, t_ms?: number) {
    return this.post<CommandResponse>(`/sessions/${id}/utterance`, { text, t_ms });
  }

  confirm(id: string, accept = true, t_ms?: number) {
    return this.post<CommandResponse>(`/sessions/${id}/confirm`, { accept, t_ms });
  }

  cancel(id: string, t_ms?: number) {
    return this.post<CommandResponse>(`/sessions/${id}/cancel`, { t_ms });
  }

  teachKeypoint(id: string, px: number, py: number, t_ms?: number) {
    return this.post<CommandResponse>(`/sessions/${id}/teach/keypoint`,
      { px, py, t_ms });
  }

  teachDecomposition(id: string, text: string, t_ms?: number) {
    return this.post<CommandResponse>(`/sessions/${id}/teach/decomposition`,
      { text, t_ms });
  }

  demoBegin(id: string, target: string, verb?: string, t_ms?: number) {
    return this.post<CommandResponse>(`/sessions/${id}/teach/demo/begin`,
      { target, verb, t_ms });
  }

  demoAppend(id: string, p: [number, number, number], ts: number) {
    return this.post<CommandResponse>(`/sessions/${id}/teach/demo/append`,
      { p, ts });
  }

  demoEnd(id: string, t_ms?: number) {
    return this.post<CommandResponse>(`/sessions/${id}/teach/demo/end`, { t_ms });
  }

  log(id: string) {
    return this.get<{ records: EventRecord[] }>(`/sessions/${id}/log`);
  }

  preview(id: string) {
    return this.get<PreviewDoc>(`/sessions/${id}/preview`);
  }

  metrics(id: string) {
    return this.get<{ metrics: MetricsDoc; recomputed: MetricsDoc }>(
      `/sessions/${id}/metrics`);
  }

  /**
   * Stream records in seq order. Uses the WebSocket route when the runtime
   * provides one, otherwise falls back to polling the log with a cursor.
   * Returns an unsubscribe function.
   */
  subscribe(id: string, onRecord: (rec: EventRecord) => void,
            opts: SubscribeOptions = {}): () => void {
    const WS = (globalThis as { WebSocket?: typeof WebSocket }).WebSocket;
    if (WS) {
      const wsUrl = this.baseUrl.replace(/^http/, "ws");
      const socket = new WS(`${wsUrl}/sessions/${id}/events`);
      socket.onmessage = (ev) => onRecord(JSON.parse(String(ev.data)));
      return () => socket.close();
    }
    let cursor = 0;
    let stopped = false;
    const tick = async () => {
      if (stopped) return;
      try {
        const { records } = await this.log(id);
        for (const rec of records.slice(cursor)) {
          cursor += 1;
          onRecord(rec);
        }
      } catch {
        /* transient poll failure; retry on the next tick */
      }
      if (!stopped) setTimeout(tick, opts.pollMs ?? 100);
    };
    void tick();
    return () => {
      stopped = true;
    };
  }
}
