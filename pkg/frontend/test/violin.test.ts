import { describe, expect, it } from "vitest";

import { DEFAULT_GEOMETRY, rateToY, violinOutline } from "../src/violin.js";
import type { PosteriorCell } from "../src/types.js";
import fixtures from "./fixtures.json";

const cell = (fixtures.summary.aggregate as Record<string, PosteriorCell>)["finetuned"];

describe("violin geometry", () => {
  it("maps success rate monotonically with 1 at the top", () => {
    expect(rateToY(1, DEFAULT_GEOMETRY)).toBeLessThan(rateToY(0, DEFAULT_GEOMETRY));
    expect(rateToY(0.75, DEFAULT_GEOMETRY)).toBeLessThan(rateToY(0.25, DEFAULT_GEOMETRY));
  });

  it("uses exactly the server's density points, mirrored", () => {
    const outline = violinOutline(cell);
    const vertices = outline.split(" ");
    expect(vertices).toHaveLength(2 * cell.density.x.length);
    // Mirror symmetry about the vertical axis: x_right + x_left = width.
    const mid = DEFAULT_GEOMETRY.width / 2;
    const n = cell.density.x.length;
    for (let i = 0; i < n; i++) {
      const [rx, ry] = vertices[i].split(",").map(Number);
      const [lx, ly] = vertices[2 * n - 1 - i].split(",").map(Number);
      expect(rx - mid).toBeCloseTo(mid - lx, 9);
      expect(ry).toBeCloseTo(ly, 9);
      expect(ry).toBeCloseTo(rateToY(cell.density.x[i], DEFAULT_GEOMETRY), 9);
    }
  });

  it("gives the widest point to the densest sample", () => {
    const outline = violinOutline(cell);
    const vertices = outline.split(" ").map((v) => v.split(",").map(Number));
    const n = cell.density.x.length;
    const widths = vertices.slice(0, n).map(([x]) => x - DEFAULT_GEOMETRY.width / 2);
    const densest = cell.density.y.indexOf(Math.max(...cell.density.y));
    expect(widths.indexOf(Math.max(...widths))).toBe(densest);
  });
});
