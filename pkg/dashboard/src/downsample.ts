/** Client-side curve thinning so long runs stay cheap to render. */

export const MAX_POINTS = 5000;

/**
 * Even-stride subsample keeping the first and last elements. Below the
 * cap the input is returned as a copy, untouched.
 */
export function downsample<T>(points: readonly T[], maxPoints = MAX_POINTS): T[] {
  if (maxPoints < 2) throw new Error("maxPoints must be at least 2");
  if (points.length <= maxPoints) return [...points];
  const last = points.length - 1;
  const stride = last / (maxPoints - 1);
  const out: T[] = [];
  for (let i = 0; i < maxPoints; i++) {
    out.push(points[Math.round(i * stride)] as T);
  }
  return out;
}
