/** Wiring: 1 Hz status polling, incremental history, control handlers. */

import { ApiError, Client } from "./api.js";
import { equalizeRest, normalizeWeights, submittable } from "./mixing.js";
import { initView, render, setSliderPositions } from "./render.js";
import { DashboardState } from "./store.js";

const POLL_MS = 1000;

const client = new Client();
const store = new DashboardState();

function describe(e: unknown): string {
  if (e instanceof ApiError || e instanceof Error) return e.message;
  return String(e);
}

function draw(): void {
  render(store, Date.now());
}

/** One mutation at a time; the outcome, good or bad, lands in the notice. */
async function mutate(name: string, action: () => Promise<string>): Promise<void> {
  if (!store.controlsEnabled(Date.now()) || !store.beginMutation(name)) return;
  draw();
  try {
    store.notice = await action();
  } catch (e) {
    store.notice = `${name} rejected: ${describe(e)}`;
  } finally {
    store.endMutation();
    draw();
  }
}

initView({
  onSlider(code, value) {
    if (store.pending) {
      store.pending[code] = value;
      draw();
    }
  },
  onEqualize(code) {
    if (store.pending) {
      store.pending = equalizeRest(store.pending, code);
      setSliderPositions(store.pending);
      draw();
    }
  },
  onLoadActive() {
    store.loadActive();
    if (store.pending) setSliderPositions(store.pending);
    draw();
  },
  onSubmit() {
    const pending = store.pending;
    if (!pending || !submittable(pending)) return;
    const weights = normalizeWeights(pending);
    void mutate("mixing", async () => {
      const ack = await client.submitMixing(weights);
      store.recordSubmission({
        at: Date.now(),
        effective_step: ack.effective_step,
        weights: ack.weights,
      });
      store.pending = { ...ack.weights };
      setSliderPositions(store.pending);
      return `mixing accepted, effective from step ${ack.effective_step}`;
    });
  },
  onPause() {
    void mutate("pause", async () => {
      const ack = await client.pause();
      return `${ack.state} at step ${ack.step}`;
    });
  },
  onResume() {
    void mutate("resume", async () => {
      const ack = await client.resume();
      return `${ack.state} at step ${ack.step}`;
    });
  },
  onCheckpoint() {
    void mutate("checkpoint", async () => {
      const ack = await client.checkpoint();
      return `checkpoint written at step ${ack.step}: ${ack.path}`;
    });
  },
});

let polling = false;

async function poll(): Promise<void> {
  if (polling) return;
  polling = true;
  try {
    const snap = await client.status();
    store.onSnapshot(snap, Date.now());
    if (snap.step > store.history.lastStep) {
      store.history.append(await client.historySince(store.history.lastStep));
    }
  } catch (e) {
    store.onPollError(describe(e));
  } finally {
    polling = false;
  }
  draw();
}

void poll();
setInterval(() => {
  void poll();
  // Redraw even when a poll is skipped or hanging so the staleness
  // indicator keeps counting.
  draw();
}, POLL_MS);
