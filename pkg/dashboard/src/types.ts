/** Wire types for the training control surface, field-for-field. */

export type TrainState = "idle" | "running" | "paused" | "diverged";

export interface StatusSnapshot {
  state: TrainState;
  step: number;
  lr: number | null;
  loss: number | null;
  tokens: number | null;
  per_language_loss: Record<string, number>;
  per_language_wer: Record<string, number> | null;
  mixing: Record<string, number>;
  throughput: number;
  error: string | null;
}

export interface HistoryRow {
  step: number;
  lr: number;
  loss: number;
  tokens: number;
  per_language_loss: Record<string, number>;
}

export interface MixingAck {
  effective_step: number;
  weights: Record<string, number>;
}

export interface LifecycleAck {
  state: string;
  step: number;
}

export interface CheckpointAck {
  path: string;
  step: number;
}

export interface SubmissionEntry {
  at: number;
  effective_step: number;
  weights: Record<string, number>;
}
