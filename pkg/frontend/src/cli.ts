#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { FigureError } from "./csv";
import { loadSpec, render } from "./figure";

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .scriptName("figures")
    .command(
      "render",
      "render a figure from run CSVs",
      (y) =>
        y
          .option("spec", {
            type: "string",
            demandOption: true,
            describe: "path to a figure spec (JSON)",
          })
          .option("out", {
            type: "string",
            describe: "override the output path from the spec",
          }),
      (argv) => {
        const spec = loadSpec(argv.spec);
        const result = render(spec, argv.out);
        console.log(
          `SVG → ${result.out} (${result.panels} panel${result.panels === 1 ? "" : "s"}, ${result.runs} input file${result.runs === 1 ? "" : "s"})`
        );
      }
    )
    .demandCommand(1)
    .strict()
    .help()
    .parseAsync();
}

main().catch((err) => {
  if (err instanceof FigureError) {
    console.error(`error: ${err.message}`);
  } else {
    console.error(err);
  }
  process.exit(1);
});
