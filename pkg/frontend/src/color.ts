/** Color handling: the categorical stability-region palette and the
 *  perceptually uniform heatmap scale. */

import { interpolateViridis } from "d3-scale-chromatic";

export type RGB = [number, number, number];

function hex2rgb(hex: string): RGB {
  const n = parseInt(hex.slice(1), 16);
  return [(n >> 16) & 255, (n >> 8) & 255, n & 255];
}

function rgbStr([r, g, b]: RGB): string {
  return `rgb(${r},${g},${b})`;
}

/** Mix a color toward white; the "also 0-state stable" variants. */
export function lighten(hex: string, f: number): string {
  const rgb = hex2rgb(hex).map((c) => Math.round(c + (255 - c) * f)) as RGB;
  return rgbStr(rgb);
}

/** Stability-region legend: which steady states are stable in a cell.
 *  White: only the 0 state; blue: only the S state; red: S and A;
 *  purple: S and M; dark red: S, A and M; brighter variants mark cells
 *  where the 0 state is also stable. */
export interface PhaseCategory {
  code: number;
  label: string;
  color: string;
  brighter: string;
}

export const PHASE_CATEGORIES: PhaseCategory[] = [
  { code: 0, label: "0 state", color: "#ffffff", brighter: "#ffffff" },
  { code: 1, label: "only S", color: "#3a63ad", brighter: lighten("#3a63ad", 0.45) },
  { code: 2, label: "S and A", color: "#c03a2b", brighter: lighten("#c03a2b", 0.45) },
  { code: 3, label: "S and M", color: "#7e4bb0", brighter: lighten("#7e4bb0", 0.45) },
  { code: 4, label: "S, A and M", color: "#7e1021", brighter: lighten("#7e1021", 0.45) },
];

const PHASE_EXTRA: PhaseCategory[] = [
  { code: -1, label: "none", color: "#d9d9d9", brighter: "#d9d9d9" },
  { code: 5, label: "other", color: "#3aa655", brighter: lighten("#3aa655", 0.45) },
];

export function phaseColor(code: number, brighter: boolean): string {
  const cat = PHASE_CATEGORIES.concat(PHASE_EXTRA).find((c) => c.code === code);
  if (!cat) throw new Error(`unknown stability color code ${code}`);
  return brighter ? cat.brighter : cat.color;
}

/** Branch colors keyed by stationary symmetry label. */
export const SYMMETRY_COLORS: Record<string, string> = {
  Zero: "#8c8c8c",
  S: "#2166ac",
  A: "#b2182b",
  M: "#762a83",
};

export function symmetryColor(label: string): string {
  return SYMMETRY_COLORS[label] ?? "#404040";
}

/** Viridis sample at t in [0, 1] (clamped). */
export function viridis(t: number): string {
  return interpolateViridis(Math.max(0, Math.min(1, t)));
}
