/** Wire types for the session service JSON API. */

export type Phase = "seeding" | "proposing" | "complete";

export interface SessionConfig {
  budget: number;
  initial_points?: number;
  lambda?: number;
  sigma?: number;
  k?: number;
}

export interface PointLabel {
  x: number;
  y: number;
  class_id: number;
}

export interface CreateSessionResponse {
  session_id: string;
  phase: Phase;
  suggested_seed_points?: PointLabel[];
}

export interface SessionView {
  session_id: string;
  image_id: string | null;
  phase: Phase;
  labels_count: number;
  budget: number;
  initial_points: number;
  seed_count: number;
  width: number;
  height: number;
  k: number;
  strict: boolean;
  evaluation: boolean;
  labels: PointLabel[];
}

export interface Proposal {
  x: number;
  y: number;
  m_value: number;
  phase: Phase;
}

export interface LabelAccepted {
  accepted: boolean;
  labels_count: number;
  phase: Phase;
}

export interface LegendEntry {
  id: number;
  name: string;
  color: string; // #rrggbb
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}
