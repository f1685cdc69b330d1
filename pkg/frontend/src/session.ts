/** Client-side session state: a thin mirror of the service's state machine.
 *
 * The service is the single source of truth; this class holds nothing that
 * cannot be refetched from the session id alone, so a page reload restores
 * the identical view via `UiSession.restore`.  Every mutating method maps
 * to exactly one service call; there is no client-side propagation logic.
 */

import { SessionApi } from "./api.js";
import { decodeGrayscalePng } from "./png.js";
import {
  ApiError,
  Phase,
  PointLabel,
  Proposal,
  SessionConfig,
  SessionView,
} from "./types.js";

export class UiSession {
  proposal: Proposal | null = null;
  maskIds: Uint8Array | null = null;

  private constructor(
    readonly api: SessionApi,
    readonly id: string,
    private state: SessionView,
    readonly suggestedSeeds: PointLabel[] = [],
  ) {}

  static async start(
    api: SessionApi,
    imageId: string,
    config: SessionConfig,
    evaluation = false,
  ): Promise<UiSession> {
    const created = await api.createSession(imageId, config, evaluation);
    const state = await api.getSession(created.session_id);
    return new UiSession(
      api, created.session_id, state, created.suggested_seed_points ?? [],
    );
  }

  /** Rebuild the full view after a page reload, from the id alone. */
  static async restore(api: SessionApi, sessionId: string): Promise<UiSession> {
    const state = await api.getSession(sessionId);
    const session = new UiSession(api, sessionId, state);
    if (state.labels_count > 0) {
      await session.refreshMask();
    }
    if (state.phase === "proposing") {
      await session.refreshProposal();
    }
    return session;
  }

  get phase(): Phase {
    return this.state.phase;
  }

  get width(): number {
    return this.state.width;
  }

  get height(): number {
    return this.state.height;
  }

  get budget(): number {
    return this.state.budget;
  }

  get labelsCount(): number {
    return this.state.labels_count;
  }

  get seedCount(): number {
    return this.state.seed_count;
  }

  get labels(): PointLabel[] {
    return this.state.labels;
  }

  get progress(): string {
    return `${this.labelsCount} / ${this.budget}`;
  }

  inBounds(x: number, y: number): boolean {
    return x >= 0 && y >= 0 && x < this.width && y < this.height;
  }

  /** Free-click seed label; only valid while seeding. */
  async submitSeed(x: number, y: number, classId: number): Promise<void> {
    if (this.phase !== "seeding") {
      throw new Error(`cannot seed in phase ${this.phase}`);
    }
    if (!this.inBounds(x, y)) {
      throw new Error(`seed (${x}, ${y}) outside the canvas`);
    }
    const accepted = await this.api.submitLabel(this.id, {
      x, y, class_id: classId,
    });
    await this.syncState(accepted.phase);
  }

  /** Label the outstanding proposal with the chosen class. */
  async labelProposal(classId: number): Promise<void> {
    if (this.proposal === null) {
      throw new Error("no proposal to label");
    }
    const { x, y } = this.proposal;
    try {
      const accepted = await this.api.submitLabel(this.id, {
        x, y, class_id: classId,
      });
      this.proposal = null;
      await this.syncState(accepted.phase);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // Stale proposal: someone labeled meanwhile; refetch and surface.
        this.proposal = null;
        throw new Error("stale proposal — refresh");
      }
      throw error;
    }
  }

  async refreshProposal(): Promise<Proposal | null> {
    if (this.phase !== "proposing") {
      this.proposal = null;
      return null;
    }
    this.proposal = await this.api.getProposal(this.id);
    return this.proposal;
  }

  async refreshMask(): Promise<void> {
    const png = await this.api.getMaskPng(this.id);
    const decoded = await decodeGrayscalePng(png);
    if (decoded.width !== this.width || decoded.height !== this.height) {
      throw new Error("mask dimensions do not match the session image");
    }
    this.maskIds = decoded.ids;
  }

  private async syncState(phase: Phase): Promise<void> {
    this.state = await this.api.getSession(this.id);
    if (phase === "proposing") {
      await this.refreshProposal();
    }
  }
}
