// Violin shapes built from the density-curve points supplied by the server,
// mirrored about a vertical axis. Geometry only; no statistics are computed
// here.

import type { PosteriorCell } from "./types.js";

export interface ViolinGeometry {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_GEOMETRY: ViolinGeometry = { width: 90, height: 220, pad: 12 };

/** Map a success rate in [0, 1] to a y pixel (1 at the top). */
export function rateToY(rate: number, geom: ViolinGeometry): number {
  return geom.pad + (1 - rate) * (geom.height - 2 * geom.pad);
}

/**
 * SVG polygon points for the mirrored density outline. The horizontal
 * half-width at each curve sample is proportional to its density relative
 * to the curve's maximum.
 */
export function violinOutline(cell: PosteriorCell, geom: ViolinGeometry = DEFAULT_GEOMETRY): string {
  const { x, y } = cell.density;
  const mid = geom.width / 2;
  const maxDensity = Math.max(...y, 1e-12);
  const halfWidth = (d: number) => (d / maxDensity) * (geom.width / 2 - 2);
  const right = x.map((rate, i) => `${mid + halfWidth(y[i])},${rateToY(rate, geom)}`);
  const left = x
    .map((rate, i) => `${mid - halfWidth(y[i])},${rateToY(rate, geom)}`)
    .reverse();
  return [...right, ...left].join(" ");
}

/** Quantile tick positions (pixel y) for the q05/q50/q95 whisker marks. */
export function quantileTicks(cell: PosteriorCell, geom: ViolinGeometry = DEFAULT_GEOMETRY) {
  return {
    q05: rateToY(cell.q05, geom),
    q50: rateToY(cell.q50, geom),
    q95: rateToY(cell.q95, geom),
    mean: rateToY(cell.mean, geom),
  };
}
