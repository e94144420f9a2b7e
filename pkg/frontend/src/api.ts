// Typed client for the edit service. Every method maps to one endpoint and
// surfaces the service's structured errors as ApiError.

import type { DragPair } from './state.js';
import { decodeGrid, type DecodedGrid } from './lgrd.js';

export interface SessionInfo {
  id: string;
  status: string;
  channels: number;
  height: number;
  width: number;
}

export interface AttentionJson {
  height: number;
  width: number;
  weights: number[][];
}

export interface MaskJson {
  height: number;
  width: number;
  bits: number[][];
}

export interface EditResponse {
  n: number;
  blanks_filled: number;
  collisions: number;
  timings: Record<string, number>;
  instructions: unknown[];
  result_url: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
    public readonly field?: string,
  ) {
    super(message);
  }
}

async function fail(res: Response): Promise<never> {
  let code = 'http_error';
  let message = `${res.status} ${res.statusText}`;
  let field: string | undefined;
  try {
    const body = await res.json();
    if (typeof body.code === 'string') code = body.code;
    if (typeof body.message === 'string') message = body.message;
    if (typeof body.field === 'string') field = body.field;
  } catch {
    // non-JSON error body; keep the HTTP defaults
  }
  throw new ApiError(res.status, code, message, field);
}

export class EditClient {
  constructor(private readonly baseUrl: string = '') {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) await fail(res);
    return res.json();
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!res.ok) await fail(res);
    return res.json();
  }

  createSession(scene: string, config: Record<string, unknown> = {}): Promise<SessionInfo> {
    return this.postJson('/sessions', { scene, config });
  }

  sessionInfo(sid: string): Promise<SessionInfo> {
    return this.getJson(`/sessions/${sid}`);
  }

  attention(sid: string, x: number, y: number): Promise<AttentionJson> {
    return this.getJson(`/sessions/${sid}/attention?x=${x}&y=${y}`);
  }

  maskPreview(sid: string, x: number, y: number, tau: number): Promise<MaskJson> {
    return this.getJson(`/sessions/${sid}/mask?x=${x}&y=${y}&tau=${tau}`);
  }

  applyEdit(sid: string, pairs: DragPair[], overrides: Record<string, unknown> = {}): Promise<EditResponse> {
    const points = pairs
      .filter((p) => p.target !== null)
      .map((p) => ({ handle: p.handle, target: p.target }));
    return this.postJson(`/sessions/${sid}/edits`, { points, overrides });
  }

  async fetchResult(resultUrl: string): Promise<DecodedGrid> {
    const res = await fetch(this.baseUrl + resultUrl);
    if (!res.ok) await fail(res);
    return decodeGrid(await res.arrayBuffer());
  }
}
