/** Minimal deterministic SVG builder: fixed canvas, fixed font, fixed
 *  number formatting, insertion-ordered elements. */

export const FONT = "DejaVu Sans";

/** Coordinate formatting: fixed two decimals, trailing zeros stripped. */
export function fmt(x: number): string {
  if (!isFinite(x)) throw new Error(`non-finite coordinate ${x}`);
  const s = x.toFixed(2);
  return s.replace(/\.?0+$/, "") || "0";
}

/** Tick-label formatting: short, locale-free. */
export function fmtTick(x: number): string {
  if (x === 0) return "0";
  const a = Math.abs(x);
  if (a >= 1e4 || a < 1e-3) return x.toExponential(1).replace("e+", "e");
  return String(parseFloat(x.toPrecision(4)));
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export interface Scale {
  domain: [number, number];
  range: [number, number];
  map(x: number): number;
}

export function linScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0;
  return {
    domain: [d0, d1],
    range: [r0, r1],
    map(x: number) {
      return span === 0 ? (r0 + r1) / 2 : r0 + ((x - d0) / span) * (r1 - r0);
    },
  };
}

/** 1-2-5 tick positions covering [a, b] with about n ticks. */
export function ticks(a: number, b: number, n = 6): number[] {
  if (a === b) return [a];
  const span = Math.abs(b - a);
  const raw = span / Math.max(1, n);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 10 : norm >= 2 ? 5 : norm >= 1 ? 2 : 1) * mag;
  const lo = Math.ceil(Math.min(a, b) / step) * step;
  const out: number[] = [];
  for (let t = lo; t <= Math.max(a, b) + step * 1e-9; t += step) {
    out.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return out;
}

interface TextOpts {
  size?: number;
  anchor?: "start" | "middle" | "end";
  fill?: string;
  rotate?: number;
  bold?: boolean;
}

export class Svg {
  private parts: string[] = [];
  private clipCount = 0;

  constructor(public width: number, public height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`);
    this.rect(0, 0, width, height, "#ffffff");
  }

  raw(s: string): void {
    this.parts.push(s);
  }

  rect(x: number, y: number, w: number, h: number, fill: string,
       stroke?: string): void {
    const s = stroke ? ` stroke="${stroke}" stroke-width="0.5"` : "";
    this.parts.push(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" ` +
      `height="${fmt(h)}" fill="${fill}"${s}/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
       width = 1, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(`<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" ` +
      `y2="${fmt(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  polyline(pts: [number, number][], stroke: string, width = 1.5,
           dash?: string): void {
    if (pts.length < 2) return;
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    const p = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(`<polyline points="${p}" fill="none" stroke="${stroke}" ` +
      `stroke-width="${width}" stroke-linejoin="round"${d}/>`);
  }

  circle(cx: number, cy: number, r: number, fill: string,
         stroke?: string): void {
    const s = stroke ? ` stroke="${stroke}" stroke-width="1"` : "";
    this.parts.push(`<circle cx="${fmt(cx)}" cy="${fmt(cy)}" r="${fmt(r)}" ` +
      `fill="${fill}"${s}/>`);
  }

  square(cx: number, cy: number, half: number, fill: string,
         stroke?: string): void {
    this.rect(cx - half, cy - half, 2 * half, 2 * half, fill, stroke);
  }

  text(x: number, y: number, s: string, opts: TextOpts = {}): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? "#000000";
    const rot = opts.rotate
      ? ` transform="rotate(${opts.rotate} ${fmt(x)} ${fmt(y)})"` : "";
    const weight = opts.bold ? ` font-weight="bold"` : "";
    this.parts.push(`<text x="${fmt(x)}" y="${fmt(y)}" ` +
      `font-family="${FONT}" font-size="${size}" text-anchor="${anchor}" ` +
      `fill="${fill}"${weight}${rot}>${esc(s)}</text>`);
  }

  /** Open a clipped group bounded by a rectangle; pair with closeGroup. */
  openClip(x: number, y: number, w: number, h: number): void {
    const id = `clip${this.clipCount++}`;
    this.parts.push(`<clipPath id="${id}"><rect x="${fmt(x)}" y="${fmt(y)}" ` +
      `width="${fmt(w)}" height="${fmt(h)}"/></clipPath>`);
    this.parts.push(`<g clip-path="url(#${id})">`);
  }

  closeGroup(): void {
    this.parts.push("</g>");
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export interface Frame {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  xs: Scale;
  ys: Scale;
}

/** Plot frame with ticks, labels, and a title; y axis increases upward. */
export function frame(svg: Svg, x0: number, y0: number, x1: number, y1: number,
                      xdom: [number, number], ydom: [number, number],
                      xLabel: string, yLabel: string, title: string): Frame {
  const xs = linScale(xdom[0], xdom[1], x0, x1);
  const ys = linScale(ydom[0], ydom[1], y1, y0);
  for (const t of ticks(xdom[0], xdom[1])) {
    const px = xs.map(t);
    svg.line(px, y1, px, y1 + 4, "#000000", 1);
    svg.text(px, y1 + 17, fmtTick(t), { anchor: "middle", size: 11 });
  }
  for (const t of ticks(ydom[0], ydom[1])) {
    const py = ys.map(t);
    svg.line(x0 - 4, py, x0, py, "#000000", 1);
    svg.text(x0 - 7, py + 4, fmtTick(t), { anchor: "end", size: 11 });
  }
  svg.raw(`<rect x="${fmt(x0)}" y="${fmt(y0)}" width="${fmt(x1 - x0)}" ` +
    `height="${fmt(y1 - y0)}" fill="none" stroke="#000000" stroke-width="1"/>`);
  svg.text((x0 + x1) / 2, y1 + 36, xLabel, { anchor: "middle", size: 13 });
  svg.text(x0 - 48, (y0 + y1) / 2, yLabel,
           { anchor: "middle", size: 13, rotate: -90 });
  if (title) {
    svg.text((x0 + x1) / 2, y0 - 12, title,
             { anchor: "middle", size: 14, bold: true });
  }
  return { x0, y0, x1, y1, xs, ys };
}

/** Vertical colorbar with tick labels. */
export function colorbar(svg: Svg, x: number, y: number, w: number, h: number,
                         lo: number, hi: number, cmap: (t: number) => string,
                         label: string): void {
  const steps = 64;
  for (let i = 0; i < steps; i++) {
    const t = (i + 0.5) / steps;
    svg.rect(x, y + h - ((i + 1) * h) / steps, w, h / steps + 0.5, cmap(t));
  }
  svg.raw(`<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" ` +
    `height="${fmt(h)}" fill="none" stroke="#000000" stroke-width="1"/>`);
  for (const t of ticks(lo, hi, 5)) {
    const py = y + h - ((t - lo) / (hi - lo || 1)) * h;
    svg.line(x + w, py, x + w + 3, py, "#000000", 1);
    svg.text(x + w + 6, py + 4, fmtTick(t), { size: 10 });
  }
  svg.text(x + w / 2, y - 8, label, { anchor: "middle", size: 11 });
}
