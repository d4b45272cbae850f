/** Slider-weight arithmetic: validation, normalization, equalize-rest. */

export function submittable(weights: Record<string, number>): boolean {
  const values = Object.values(weights);
  return (
    values.length > 0 &&
    values.every((v) => Number.isFinite(v) && v >= 0) &&
    values.some((v) => v > 0)
  );
}

export function normalizeWeights(weights: Record<string, number>): Record<string, number> {
  const total = Object.values(weights).reduce((a, b) => a + b, 0);
  if (!(total > 0)) throw new Error("weights must include at least one positive entry");
  return Object.fromEntries(Object.entries(weights).map(([code, v]) => [code, v / total]));
}

/**
 * Hold one language's share and split the remainder evenly over the others,
 * so lifting a language to 0.4 leaves every other language at the same
 * weight with one click.
 */
export function equalizeRest(weights: Record<string, number>, keep: string): Record<string, number> {
  if (!(keep in weights)) throw new Error(`unknown language: ${keep}`);
  const kept = Math.min(Math.max(weights[keep] ?? 0, 0), 1);
  const others = Object.keys(weights).filter((code) => code !== keep);
  if (others.length === 0) return { [keep]: 1 };
  const share = (1 - kept) / others.length;
  const out: Record<string, number> = {};
  for (const code of Object.keys(weights)) {
    out[code] = code === keep ? kept : share;
  }
  return out;
}
