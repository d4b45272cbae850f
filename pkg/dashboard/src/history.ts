/** Accumulated metric rows, deduplicated by step and kept sorted. */

import type { HistoryRow } from "./types.js";

export interface SeriesPoint {
  step: number;
  value: number;
}

export class HistoryStore {
  private rows: HistoryRow[] = [];
  private seen = new Set<number>();

  get size(): number {
    return this.rows.length;
  }

  /** Highest step seen so far; the next history fetch starts here. */
  get lastStep(): number {
    const tail = this.rows[this.rows.length - 1];
    return tail ? tail.step : 0;
  }

  append(batch: readonly HistoryRow[]): void {
    let added = false;
    for (const row of batch) {
      if (this.seen.has(row.step)) continue;
      this.seen.add(row.step);
      this.rows.push(row);
      added = true;
    }
    if (added) this.rows.sort((a, b) => a.step - b.step);
  }

  /** Sorted union of language codes that have appeared in any row. */
  languages(): string[] {
    const codes = new Set<string>();
    for (const row of this.rows) {
      for (const code of Object.keys(row.per_language_loss)) codes.add(code);
    }
    return [...codes].sort();
  }

  /** Loss curve for one language; rows where it sat out are skipped. */
  series(code: string): SeriesPoint[] {
    const out: SeriesPoint[] = [];
    for (const row of this.rows) {
      const value = row.per_language_loss[code];
      if (value !== undefined) out.push({ step: row.step, value });
    }
    return out;
  }

  /** Overall batch loss, which averages over whatever mix each step drew. */
  averageSeries(): SeriesPoint[] {
    return this.rows.map((row) => ({ step: row.step, value: row.loss }));
  }
}
