#!/usr/bin/env node
/**
 * Figure renderer for benchmark outputs.
 *
 * Usage:
 *   stackbench-render running-risk <results.json>... [--out-dir DIR]
 *   stackbench-render sweep <table.csv> [--out-dir DIR]
 */

import { renderPreferenceSweep, renderRunningRisk } from "./render.js";

function usage(): never {
  console.error(
    "usage:\n" +
      "  stackbench-render running-risk <results.json>... [--out-dir DIR]\n" +
      "  stackbench-render sweep <table.csv> [--out-dir DIR]",
  );
  process.exit(2);
}

function main(argv: string[]): number {
  const args = [...argv];
  const verb = args.shift();
  let outDir = ".";
  const inputs: string[] = [];
  while (args.length > 0) {
    const a = args.shift()!;
    if (a === "--out-dir") {
      const v = args.shift();
      if (!v) usage();
      outDir = v;
    } else if (a.startsWith("-")) {
      usage();
    } else {
      inputs.push(a);
    }
  }
  if (!verb || inputs.length === 0) usage();

  let exit = 0;
  if (verb === "running-risk") {
    for (const resultsPath of inputs) {
      const figures = renderRunningRisk(resultsPath, outDir);
      for (const fig of figures) {
        for (const w of fig.warnings) console.error(`warning: ${w}`);
        console.log(`figure: ${fig.path}`);
      }
    }
  } else if (verb === "sweep") {
    for (const csvPath of inputs) {
      const figures = renderPreferenceSweep(csvPath, outDir);
      for (const fig of figures) {
        for (const w of fig.warnings) console.error(`warning: ${w}`);
        console.log(`figure: ${fig.path}`);
      }
    }
  } else {
    usage();
  }
  return exit;
}

try {
  process.exit(main(process.argv.slice(2)));
} catch (err: any) {
  console.error(`error: ${err?.message ?? err}`);
  process.exit(1);
}
