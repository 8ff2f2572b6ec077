/** Stability phase diagram over the (detuning, drive) plane. */

import { col, readTable, strCol } from "../io.js";
import { PHASE_CATEGORIES, phaseColor } from "../color.js";
import { Svg, frame } from "../svg.js";
import type { FigureSpec } from "../spec.js";

function uniqueSorted(values: number[]): number[] {
  return [...new Set(values)].sort((a, b) => a - b);
}

/** Cell boundaries halfway between grid centers. */
function edges(centers: number[]): number[] {
  if (centers.length === 1) {
    return [centers[0] - 0.5, centers[0] + 0.5];
  }
  const e = [centers[0] - (centers[1] - centers[0]) / 2];
  for (let i = 0; i + 1 < centers.length; i++) {
    e.push((centers[i] + centers[i + 1]) / 2);
  }
  const n = centers.length;
  e.push(centers[n - 1] + (centers[n - 1] - centers[n - 2]) / 2);
  return e;
}

export function renderPhaseDiagram(spec: FigureSpec): string {
  const table = readTable(spec.inputs[0]);
  const delta = col(table, "delta");
  const drive = col(table, "drive");
  const code = col(table, "color_code");
  const labels = strCol(table, "labels");

  const dv = uniqueSorted(delta);
  const gv = uniqueSorted(drive);
  if (dv.length * gv.length !== table.rows.length) {
    throw new Error(`mismatched grid in ${table.path}: ` +
      `${table.rows.length} rows != ${dv.length} x ${gv.length}`);
  }
  const de = edges(dv);
  const ge = edges(gv);

  const svg = new Svg(840, 560);
  const fr = frame(svg, 70, 42, 640, 500,
    [de[0], de[de.length - 1]], [ge[0], ge[ge.length - 1]],
    "detuning", "drive", spec.title || "stability phase diagram");

  const di = new Map(dv.map((v, i) => [v, i]));
  const gi = new Map(gv.map((v, i) => [v, i]));
  for (let r = 0; r < table.rows.length; r++) {
    const i = di.get(delta[r])!;
    const j = gi.get(drive[r])!;
    // labels prefixed with "Zero|" mark colored cells where the 0 state
    // is also stable (the brighter variants); bare "Zero" is the white cell
    const brighter = labels[r].startsWith("Zero|");
    const x = fr.xs.map(de[i]);
    const w = fr.xs.map(de[i + 1]) - x;
    const yTop = fr.ys.map(ge[j + 1]);
    const h = fr.ys.map(ge[j]) - yTop;
    svg.rect(x, yTop, w + 0.3, h + 0.3, phaseColor(code[r], brighter));
  }
  svg.raw(`<rect x="70" y="42" width="570" height="458" fill="none" ` +
    `stroke="#000000" stroke-width="1"/>`);

  let y = 70;
  const lx = 660;
  svg.text(lx, y - 14, "stable states", { size: 12, bold: true });
  for (const cat of PHASE_CATEGORIES) {
    svg.rect(lx, y, 16, 16, cat.color, "#555555");
    svg.text(lx + 22, y + 12, cat.label, { size: 12 });
    y += 24;
  }
  y += 8;
  svg.text(lx, y + 8, "brighter: 0 state", { size: 11 });
  svg.text(lx, y + 22, "also stable", { size: 11 });
  y += 36;
  for (const cat of PHASE_CATEGORIES.slice(1)) {
    svg.rect(lx, y, 16, 16, cat.brighter, "#555555");
    y += 20;
  }
  return svg.render();
}
