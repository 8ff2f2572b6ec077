/** Figure specification files: what to draw, from which inputs. */

import fs from "node:fs";
import path from "node:path";

export const KINDS = [
  "phase_diagram", "quad_dist", "psd_heatmap", "exponents", "bifurcation",
] as const;

export type FigureKind = (typeof KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  /** Data files produced by the simulator CLI, resolved to absolute paths. */
  inputs: string[];
  /** Extra files drawn on top (state markers, mode lines). */
  overlays: string[];
  /** Output path; `.svg` and `.png` siblings are written. */
  output: string;
  title: string;
  /** PSD channel for heatmaps: "S", "A", or "site_<j>". */
  channel?: string;
  /** Angular sampling rate; presence turns on aliasing emulation. */
  samplingRate?: number;
  /** Plot window |omega| <= freqWindow for PSD heatmaps. */
  freqWindow?: number;
}

const KNOWN_KEYS = new Set([
  "kind", "inputs", "overlays", "output", "title", "channel",
  "sampling_rate", "freq_window",
]);

export function loadSpec(specPath: string): FigureSpec {
  if (!fs.existsSync(specPath)) {
    throw new Error(`spec file not found: ${specPath}`);
  }
  const raw = JSON.parse(fs.readFileSync(specPath, "utf8"));
  const errors: string[] = [];
  for (const k of Object.keys(raw)) {
    if (!KNOWN_KEYS.has(k)) errors.push(`unknown key ${k}`);
  }
  if (!KINDS.includes(raw.kind)) {
    errors.push(`kind must be one of ${KINDS.join(", ")}, got ${raw.kind}`);
  }
  if (!Array.isArray(raw.inputs) || raw.inputs.length === 0) {
    errors.push("inputs must be a non-empty list of paths");
  }
  if (typeof raw.output !== "string" || !raw.output) {
    errors.push("output path required");
  }
  if (raw.sampling_rate !== undefined &&
      !(typeof raw.sampling_rate === "number" && raw.sampling_rate > 0)) {
    errors.push("sampling_rate must be a positive number");
  }
  if (errors.length) {
    throw new Error(`invalid figure spec ${specPath}:\n  ` + errors.join("\n  "));
  }
  const base = path.dirname(path.resolve(specPath));
  const resolve = (p: string) => path.resolve(base, p);
  return {
    kind: raw.kind,
    inputs: raw.inputs.map(resolve),
    overlays: (raw.overlays ?? []).map(resolve),
    output: resolve(raw.output),
    title: raw.title ?? "",
    channel: raw.channel,
    samplingRate: raw.sampling_rate,
    freqWindow: raw.freq_window,
  };
}
