/** Bifurcation tree: branch amplitudes along a sweep, solid where stable,
 *  dashed where unstable, colored by symmetry, dots at bifurcations. */

import { col, readTable, strCol, type Table } from "../io.js";
import { SYMMETRY_COLORS, symmetryColor } from "../color.js";
import { Svg, frame, type Frame } from "../svg.js";
import type { FigureSpec } from "../spec.js";

interface BranchPoint {
  value: number;
  amp: number;
  stable: boolean;
  symmetry: string;
}

function siteRms(table: Table, row: number): number {
  let sum = 0;
  let n = 0;
  for (let j = 1; table.columns.includes(`re_alpha_${j}`); j++) {
    const re = Number(table.rows[row][table.columns.indexOf(`re_alpha_${j}`)]);
    const im = Number(table.rows[row][table.columns.indexOf(`im_alpha_${j}`)]);
    sum += re * re + im * im;
    n++;
  }
  return Math.sqrt(sum / n);
}

export function renderBifurcation(spec: FigureSpec): string {
  const table = readTable(spec.inputs[0]);
  const sweep = col(table, "sweep_value");
  const ids = col(table, "branch_id");
  const stable = col(table, "stable");
  const symmetry = strCol(table, "symmetry");

  const branches = new Map<number, BranchPoint[]>();
  for (let r = 0; r < table.rows.length; r++) {
    if (!branches.has(ids[r])) branches.set(ids[r], []);
    branches.get(ids[r])!.push({
      value: sweep[r],
      amp: siteRms(table, r),
      stable: stable[r] === 1,
      symmetry: symmetry[r],
    });
  }

  const values = [...new Set(sweep)].sort((a, b) => a - b);
  const ampMax = Math.max(...[...branches.values()].flat().map((p) => p.amp));
  const svg = new Svg(780, 500);
  const fr = frame(svg, 80, 42, 700, 430,
    [values[0], values[values.length - 1]], [0, ampMax * 1.08 || 1],
    table.meta["kind"] ?? "sweep_value", "site-rms amplitude",
    spec.title || "bifurcation tree");

  for (const pts of branches.values()) drawBranch(svg, fr, pts);

  // dots where branches appear, vanish, or change stability, snapped to
  // the bifurcation values reported by the continuation
  const step = values.length > 1
    ? (values[values.length - 1] - values[0]) / (values.length - 1) : 1;
  const bifs = (table.meta["bifurcations"] ?? "")
    .split(";").filter((s) => s.length).map(Number);
  for (const b of bifs) {
    for (const pts of branches.values()) {
      const cands = [pts[0], pts[pts.length - 1]];
      for (let i = 1; i < pts.length; i++) {
        if (pts[i].stable !== pts[i - 1].stable) cands.push(pts[i]);
      }
      for (const c of cands) {
        if (Math.abs(c.value - b) <= 1.6 * Math.abs(step)) {
          svg.circle(fr.xs.map(c.value), fr.ys.map(c.amp), 3.2, "#000000");
          break;
        }
      }
    }
  }

  let y = 64;
  for (const [label, color] of Object.entries(SYMMETRY_COLORS)) {
    svg.line(560, y - 4, 588, y - 4, color, 2.5);
    svg.text(594, y, label === "Zero" ? "0 state" : `${label} state`,
             { size: 11 });
    y += 17;
  }
  svg.line(560, y - 4, 588, y - 4, "#555555", 1.5, "5 4");
  svg.text(594, y, "unstable", { size: 11 });
  return svg.render();
}

function drawBranch(svg: Svg, fr: Frame, pts: BranchPoint[]): void {
  let run: BranchPoint[] = [];
  const flush = () => {
    if (run.length > 1) {
      // run[0] may be a connector point kept from the previous run, so
      // the run's own style lives on its last point
      const tail = run[run.length - 1];
      svg.polyline(run.map((p) =>
        [fr.xs.map(p.value), fr.ys.map(p.amp)] as [number, number]),
        symmetryColor(tail.symmetry), 1.8,
        tail.stable ? undefined : "5 4");
    }
    run = run.slice(-1);
  };
  for (const p of pts) {
    if (run.length &&
        (p.stable !== run[run.length - 1].stable ||
         p.symmetry !== run[run.length - 1].symmetry)) {
      flush();
    }
    run.push(p);
  }
  flush();
}
