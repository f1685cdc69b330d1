/** Typed client for the session service; every method is one HTTP call. */

import {
  ApiError,
  CreateSessionResponse,
  LabelAccepted,
  LegendEntry,
  PointLabel,
  Proposal,
  SessionConfig,
  SessionView,
} from "./types.js";

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      detail = ((await response.json()) as { detail?: string }).detail ?? detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class SessionApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async createSession(
    imageId: string,
    config: SessionConfig,
    evaluation = false,
  ): Promise<CreateSessionResponse> {
    const response = await this.fetchFn(this.url("/sessions"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ image_id: imageId, config, evaluation }),
    });
    return asJson<CreateSessionResponse>(response);
  }

  async getSession(sessionId: string): Promise<SessionView> {
    return asJson<SessionView>(
      await this.fetchFn(this.url(`/sessions/${sessionId}`)),
    );
  }

  async getProposal(sessionId: string): Promise<Proposal> {
    return asJson<Proposal>(
      await this.fetchFn(this.url(`/sessions/${sessionId}/proposal`)),
    );
  }

  async submitLabel(sessionId: string, label: PointLabel): Promise<LabelAccepted> {
    const response = await this.fetchFn(this.url(`/sessions/${sessionId}/labels`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(label),
    });
    return asJson<LabelAccepted>(response);
  }

  async getMaskPng(sessionId: string): Promise<Uint8Array> {
    const response = await this.fetchFn(this.url(`/sessions/${sessionId}/mask`));
    if (!response.ok) {
      throw new ApiError(response.status, response.statusText);
    }
    return new Uint8Array(await response.arrayBuffer());
  }

  async getImagePngUrl(sessionId: string): Promise<string> {
    return this.url(`/sessions/${sessionId}/image`);
  }

  async getLegend(): Promise<LegendEntry[]> {
    return asJson<LegendEntry[]>(await this.fetchFn(this.url("/legend")));
  }

  async getMetrics(sessionId: string): Promise<Record<string, unknown>> {
    return asJson<Record<string, unknown>>(
      await this.fetchFn(this.url(`/sessions/${sessionId}/metrics`)),
    );
  }
}
