/** Client-side state: latest snapshot, history, drafts, submission log.
 *
 * The page is stateless with respect to the training run itself; closing
 * and reopening it only resets what is held here.
 */

import { HistoryStore } from "./history.js";
import type { StatusSnapshot, SubmissionEntry, TrainState } from "./types.js";

export const STALE_AFTER_MS = 10_000;

export type Connection = "connecting" | "live" | "stale" | "disconnected";

export class DashboardState {
  readonly history = new HistoryStore();
  latest: StatusSnapshot | null = null;
  /** Monotone display step: a late or repeated snapshot never rolls it back. */
  renderedStep = 0;
  lastSnapshotAt: number | null = null;
  lastPollError: string | null = null;
  /** Unsubmitted slider values; seeded from the first snapshot's mixing. */
  pending: Record<string, number> | null = null;
  readonly log: SubmissionEntry[] = [];
  /** Name of the POST currently in flight, if any; gates every control. */
  mutation: string | null = null;
  /** Last mutation outcome shown to the operator (ack or rejection). */
  notice: string | null = null;
  private pollFailed = false;

  onSnapshot(snap: StatusSnapshot, now: number): void {
    this.latest = snap;
    this.lastSnapshotAt = now;
    this.pollFailed = false;
    this.lastPollError = null;
    if (snap.step > this.renderedStep) this.renderedStep = snap.step;
    if (this.pending === null && Object.keys(snap.mixing).length > 0) {
      this.pending = { ...snap.mixing };
    }
  }

  onPollError(message: string): void {
    this.pollFailed = true;
    this.lastPollError = message;
  }

  connection(now: number): Connection {
    if (this.pollFailed) return "disconnected";
    if (this.lastSnapshotAt === null) return "connecting";
    return now - this.lastSnapshotAt > STALE_AFTER_MS ? "stale" : "live";
  }

  state(): TrainState | null {
    return this.latest ? this.latest.state : null;
  }

  /** Mutations are allowed only against a live, steppable run. */
  controlsEnabled(now: number): boolean {
    const s = this.state();
    return (
      this.mutation === null &&
      this.connection(now) === "live" &&
      (s === "running" || s === "paused")
    );
  }

  /** Claim the single mutation slot; false means one is already pending. */
  beginMutation(name: string): boolean {
    if (this.mutation !== null) return false;
    this.mutation = name;
    return true;
  }

  endMutation(): void {
    this.mutation = null;
  }

  recordSubmission(entry: SubmissionEntry): void {
    this.log.push(entry);
  }

  /** Reset the sliders to the schedule the trainer is actually using. */
  loadActive(): void {
    if (this.latest && Object.keys(this.latest.mixing).length > 0) {
      this.pending = { ...this.latest.mixing };
    }
  }
}
