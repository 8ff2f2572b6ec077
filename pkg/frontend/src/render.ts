/** Figure dispatch and output writing: one SVG plus a rasterized PNG. */

import fs from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { Resvg } from "@resvg/resvg-js";

import type { FigureSpec } from "./spec.js";
import { renderPhaseDiagram } from "./figures/phaseDiagram.js";
import { renderQuadDist } from "./figures/quadDist.js";
import { renderPsdHeatmap } from "./figures/psdHeatmap.js";
import { renderExponents } from "./figures/exponents.js";
import { renderBifurcation } from "./figures/bifurcation.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const FONT_FILE = path.resolve(HERE, "..", "assets", "DejaVuSans.ttf");

export function renderFigure(spec: FigureSpec): string {
  switch (spec.kind) {
    case "phase_diagram": return renderPhaseDiagram(spec);
    case "quad_dist": return renderQuadDist(spec);
    case "psd_heatmap": return renderPsdHeatmap(spec);
    case "exponents": return renderExponents(spec);
    case "bifurcation": return renderBifurcation(spec);
  }
}

export function rasterize(svg: string): Buffer {
  const resvg = new Resvg(svg, {
    font: {
      loadSystemFonts: false,
      fontFiles: [FONT_FILE],
      defaultFontFamily: "DejaVu Sans",
    },
  });
  return Buffer.from(resvg.render().asPng());
}

/** Write `<base>.svg` and `<base>.png`; returns the two paths. */
export function writeFigure(spec: FigureSpec): [string, string] {
  const svg = renderFigure(spec);
  const base = spec.output.replace(/\.(svg|png)$/, "");
  fs.mkdirSync(path.dirname(base), { recursive: true });
  const svgPath = `${base}.svg`;
  const pngPath = `${base}.png`;
  fs.writeFileSync(svgPath, svg);
  fs.writeFileSync(pngPath, rasterize(svg));
  return [svgPath, pngPath];
}
