/** Decay-rate panel: real parts of the characteristic exponents along a
 *  sweep, one line per exponent rank. */

import { configHash, readJson } from "../io.js";
import { Svg, frame } from "../svg.js";
import type { FigureSpec } from "../spec.js";

const CYCLE = ["#2166ac", "#b2182b", "#762a83", "#1b7837",
               "#e08214", "#636363"];

export function renderExponents(spec: FigureSpec): string {
  const modes = readJson(spec.inputs[0]);
  configHash(modes, spec.inputs[0]);
  if (!modes.sweep) {
    throw new Error(`${spec.inputs[0]} has no sweep block to plot`);
  }
  const points = modes.sweep.points as { value: number; states: any[] }[];
  const perPoint = points.map((pt) => ({
    value: pt.value,
    re: pt.states.flatMap((s) => s.re_mu as number[]).sort((a, b) => a - b),
  }));

  const all = perPoint.flatMap((pt) => pt.re);
  const lo = Math.min(...all, 0);
  const hi = Math.max(...all, 0);
  const pad = 0.08 * (hi - lo || 1);
  const values = perPoint.map((pt) => pt.value);

  const svg = new Svg(760, 480);
  const fr = frame(svg, 80, 42, 700, 420,
    [Math.min(...values), Math.max(...values)], [lo - pad, hi + pad],
    modes.sweep.kind, "Re mu", spec.title || "characteristic exponents");

  if (lo < 0 && hi > -pad) {
    svg.line(80, fr.ys.map(0), 700, fr.ys.map(0), "#bbbbbb", 0.8);
  }

  let open: [number, number][][] = [];
  let prevCount = -1;
  const flush = () => {
    open.forEach((line, i) => {
      svg.polyline(line, CYCLE[i % CYCLE.length], 1.6);
    });
  };
  for (const pt of perPoint) {
    if (pt.re.length !== prevCount) {
      flush();
      open = pt.re.map(() => []);
      prevCount = pt.re.length;
    }
    pt.re.forEach((m, i) =>
      open[i].push([fr.xs.map(pt.value), fr.ys.map(m)]));
  }
  flush();
  return svg.render();
}
