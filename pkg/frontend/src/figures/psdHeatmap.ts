/** Fluctuation PSD vs drive-frequency heatmap from a noisy probe sweep,
 *  with the calculated characteristic-exponent frequencies drawn on top.
 *  An explicit sampling rate additionally draws the dashed mirrored lines
 *  a sampled record would alias the out-of-band ridges onto. */

import { assertSameHash, col, configHash, readJson, readTable } from "../io.js";
import { viridis } from "../color.js";
import { Svg, colorbar, frame } from "../svg.js";
import type { FigureSpec } from "../spec.js";

const LINE = "#9e9e9e";
const DASH = "5 4";

interface ModeLines {
  /** One polyline per exponent rank; segments broken where the state
   *  count changes between sweep points. */
  lines: [number, number][][];
  maxAbs: number;
  values: number[];
}

export function modeLines(modes: any): ModeLines {
  if (!modes.sweep) {
    throw new Error("modes overlay has no sweep block");
  }
  const points = modes.sweep.points as { value: number; states: any[] }[];
  const perPoint = points.map((pt) => ({
    value: pt.value,
    mu: pt.states.flatMap((s) => s.im_mu as number[]).sort((a, b) => a - b),
  }));
  const lines: [number, number][][] = [];
  let open: [number, number][][] = [];
  let prevCount = -1;
  for (const pt of perPoint) {
    if (pt.mu.length !== prevCount) {
      lines.push(...open.filter((l) => l.length > 1));
      open = pt.mu.map(() => []);
      prevCount = pt.mu.length;
    }
    pt.mu.forEach((m, i) => open[i].push([pt.value, m]));
  }
  lines.push(...open.filter((l) => l.length > 1));
  const maxAbs = Math.max(...perPoint.flatMap((pt) => pt.mu.map(Math.abs)));
  return { lines, maxAbs, values: perPoint.map((pt) => pt.value) };
}

/** Fold a frequency into the band [-fs/2, fs/2). */
export function fold(w: number, fs: number): number {
  const r = ((w + fs / 2) % fs + fs) % fs - fs / 2;
  return r;
}

function channelColumn(table: any, requested: string | undefined): string {
  if (requested) {
    const name = requested === "S" || requested === "A"
      ? `psd_${requested}` : `psd_${requested}`;
    const v = col(table, name);
    if (v.every(isNaN)) throw new Error(`channel column ${name} is empty`);
    return name;
  }
  if (table.columns.includes("psd_S")) {
    const v = col(table, "psd_S");
    if (!v.every(isNaN)) return "psd_S";
  }
  return "psd_site_1";
}

export function renderPsdHeatmap(spec: FigureSpec): string {
  const table = readTable(spec.inputs[0]);
  const overlays = spec.overlays.map((p) => ({ path: p, data: readJson(p) }));
  assertSameHash([
    { path: table.path, hash: configHash(table) },
    ...overlays.map((o) => ({ path: o.path, hash: configHash(o.data, o.path) })),
  ]);

  const kind = table.meta["kind"] ?? table.columns[0];
  const sweep = col(table, kind);
  const omega = col(table, "omega_ft");
  const channel = channelColumn(table, spec.channel);
  const psd = col(table, channel);

  // rows come grouped per sweep point, each group on one frequency grid
  const values: number[] = [];
  const starts: number[] = [];
  for (let r = 0; r < sweep.length; r++) {
    if (r === 0 || sweep[r] !== sweep[r - 1]) {
      values.push(sweep[r]);
      starts.push(r);
    }
  }
  const nfreq = sweep.length / values.length;
  if (!Number.isInteger(nfreq)) {
    throw new Error(`mismatched grid in ${table.path}: uneven point sizes`);
  }

  const mode = overlays.length ? modeLines(overlays[0].data) : null;
  if (mode) {
    const missing = values.filter((v) =>
      !mode.values.some((m) => Math.abs(m - v) <= 1e-9 * Math.max(1, Math.abs(v))));
    if (missing.length) {
      throw new Error(`mismatched grids: overlay lacks sweep values ` +
        missing.slice(0, 3).map(String).join(", "));
    }
  }

  const window = spec.freqWindow
    ?? (mode ? 1.35 * mode.maxAbs : Math.abs(omega[nfreq - 1]));
  const keep: number[] = [];
  for (let k = 0; k < nfreq; k++) {
    if (Math.abs(omega[k]) <= window) keep.push(k);
  }
  if (keep.length < 2) throw new Error("frequency window keeps no bins");

  let lo = Infinity;
  let hi = -Infinity;
  for (const v0 of starts) {
    for (const k of keep) {
      const lp = Math.log10(psd[v0 + k]);
      if (isFinite(lp)) {
        lo = Math.min(lo, lp);
        hi = Math.max(hi, lp);
      }
    }
  }

  const svg = new Svg(800, 560);
  const vlo = Math.min(...values);
  const vhi = Math.max(...values);
  const dval = values.length > 1 ? (vhi - vlo) / (values.length - 1) : 1;
  const dw = Math.abs(omega[1] - omega[0]);
  const fr = frame(svg, 80, 42, 640, 500,
    [vlo - dval / 2, vhi + dval / 2], [-window, window],
    kind, "omega", spec.title || `fluctuation PSD (${channel})`);

  svg.openClip(80, 42, 560, 458);
  for (let i = 0; i < values.length; i++) {
    const x = fr.xs.map(values[i] - dval / 2);
    const w = fr.xs.map(values[i] + dval / 2) - x;
    for (const k of keep) {
      const yTop = fr.ys.map(omega[k] + dw / 2);
      const h = fr.ys.map(omega[k] - dw / 2) - yTop;
      const t = (Math.log10(psd[starts[i] + k]) - lo) / (hi - lo || 1);
      svg.rect(x, yTop, w + 0.3, h + 0.3, viridis(t));
    }
  }

  if (mode) {
    for (const line of mode.lines) {
      svg.polyline(line.map(([v, m]) =>
        [fr.xs.map(v), fr.ys.map(m)] as [number, number]), LINE, 1.4);
    }
    if (spec.samplingRate) {
      const fs = spec.samplingRate;
      for (const line of mode.lines) {
        // dashed images: pieces of the line beyond the Nyquist band,
        // folded back inside; broken wherever the fold branch jumps
        let piece: [number, number][] = [];
        for (const [v, m] of line) {
          const f = fold(m, fs);
          const aliased = Math.abs(f - m) > 1e-12 * Math.max(1, Math.abs(m));
          const cont = piece.length &&
            Math.abs(f - piece[piece.length - 1][1]) < fs / 4;
          if (aliased && (piece.length === 0 || cont)) {
            piece.push([fr.xs.map(v), fr.ys.map(f)]);
          } else {
            svg.polyline(piece, LINE, 1.2, DASH);
            piece = aliased ? [[fr.xs.map(v), fr.ys.map(f)]] : [];
          }
        }
        svg.polyline(piece, LINE, 1.2, DASH);
      }
      for (const nyq of [fs / 2, -fs / 2]) {
        if (Math.abs(nyq) <= window) {
          svg.line(80, fr.ys.map(nyq), 640, fr.ys.map(nyq), LINE, 0.8, DASH);
        }
      }
    }
  }
  svg.closeGroup();
  svg.raw(`<rect x="80" y="42" width="560" height="458" fill="none" ` +
    `stroke="#000000" stroke-width="1"/>`);
  colorbar(svg, 700, 42, 18, 458, lo, hi, viridis, "log10 PSD");
  return svg.render();
}
