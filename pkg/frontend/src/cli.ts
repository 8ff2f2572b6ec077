/** Render one figure from a spec file: `node dist/cli.js --spec fig.json`.
 *  `--sampling-rate W` turns on aliasing emulation for PSD heatmaps. */

import { loadSpec } from "./spec.js";
import { writeFigure } from "./render.js";

function main(argv: string[]): number {
  const at = argv.indexOf("--spec");
  if (at < 0 || at + 1 >= argv.length) {
    console.error("usage: cli.js --spec SPEC.json [--sampling-rate W]");
    return 2;
  }
  try {
    const spec = loadSpec(argv[at + 1]);
    const rateAt = argv.indexOf("--sampling-rate");
    if (rateAt >= 0) {
      const rate = Number(argv[rateAt + 1]);
      if (!(rate > 0)) {
        console.error(`bad --sampling-rate ${argv[rateAt + 1]}`);
        return 2;
      }
      spec.samplingRate = rate;
    }
    const [svgPath, pngPath] = writeFigure(spec);
    console.log(`wrote ${svgPath}`);
    console.log(`wrote ${pngPath}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
