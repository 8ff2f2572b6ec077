/** Quadrature-distribution heatmap of a quantum steady state, with the
 *  classical steady states marked on top (circles stable, squares not). */

import { assertSameHash, col, configHash, readJson, readTable } from "../io.js";
import { symmetryColor, viridis } from "../color.js";
import { Svg, colorbar, frame } from "../svg.js";
import type { FigureSpec } from "../spec.js";

const SQRT2 = Math.SQRT2;

export function renderQuadDist(spec: FigureSpec): string {
  const table = readTable(spec.inputs[0]);
  const overlays = spec.overlays.map((p) => ({ path: p, data: readJson(p) }));
  assertSameHash([
    { path: table.path, hash: configHash(table) },
    ...overlays.map((o) => ({ path: o.path, hash: configHash(o.data, o.path) })),
  ]);

  if (!table.columns.includes("x2")) return renderMarginal(spec, table);

  const x1 = col(table, "x1");
  const x2 = col(table, "x2");
  const p = col(table, "p");
  const n = Number(table.meta["grid_points"]);
  if (!n || n * n !== table.rows.length) {
    throw new Error(`mismatched grid in ${table.path}: ` +
      `${table.rows.length} rows != grid_points^2`);
  }
  const axis = x2.slice(0, n);
  const half = axis[n - 1];
  const pmax = Math.max(...p);

  const svg = new Svg(760, 600);
  const fr = frame(svg, 80, 42, 600, 562, [-half, half], [-half, half],
    "x1", "x2", spec.title || "quadrature distribution");
  const step = fr.xs.map(axis[1]) - fr.xs.map(axis[0]);
  // rows are written x1-major: row index r = i1 * n + i2
  for (let r = 0; r < p.length; r++) {
    const px = fr.xs.map(x1[r]) - step / 2;
    const py = fr.ys.map(x2[r]) - step / 2;
    svg.rect(px, py, step + 0.3, step + 0.3, viridis(p[r] / pmax));
  }
  svg.raw(`<rect x="80" y="42" width="520" height="520" fill="none" ` +
    `stroke="#000000" stroke-width="1"/>`);
  colorbar(svg, 660, 42, 18, 520, 0, pmax, viridis, "P(x1,x2)");

  for (const o of overlays) {
    for (const st of o.data.states ?? []) {
      // classical amplitudes sit at x_j = sqrt(2) Re(alpha_j)
      const cx = fr.xs.map(SQRT2 * st.re_alpha[0]);
      const cy = fr.ys.map(SQRT2 * st.re_alpha[1]);
      const fill = symmetryColor(st.symmetry);
      if (st.stable) svg.circle(cx, cy, 5, fill, "#ffffff");
      else svg.square(cx, cy, 4.5, fill, "#ffffff");
    }
  }
  return svg.render();
}

/** Single-site files hold a 1d marginal; draw it as a curve. */
function renderMarginal(spec: FigureSpec, table: any): string {
  const x1 = col(table, "x1");
  const p = col(table, "p");
  const pmax = Math.max(...p);
  const svg = new Svg(720, 480);
  const fr = frame(svg, 80, 42, 680, 430,
    [x1[0], x1[x1.length - 1]], [0, pmax * 1.05],
    "x1", "P(x1)", spec.title || "quadrature distribution");
  const pts = x1.map((x, i) =>
    [fr.xs.map(x), fr.ys.map(p[i])] as [number, number]);
  svg.polyline(pts, "#2166ac", 1.8);
  return svg.render();
}
